#include <doctest.h>

#include <string>

#include "vacal/error.hpp"
#include "vacal/score_table.hpp"

using namespace vacal;

namespace {

const std::string kHeader = "instance_id,fold_id,partition,score,label\n";

std::string message_of(const std::string& text) {
  try {
    parse_score_table(text);
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("score table: well-formed file") {
  auto t = parse_score_table(kHeader + "a,0,calibration,0.2,0\nb,0,calibration,0.7,1\nc,0,test,0.4,0\nd,1,test,1,1\n");
  REQUIRE(t.rows.size() == 4);
  CHECK(t.rows[0].partition == Partition::calibration);
  CHECK(t.rows[2].partition == Partition::test);
  CHECK(t.rows[3].score == 1.0);
  CHECK(t.rows[3].fold_id == 1);
  CHECK(t.folds() == std::vector<long long>{0, 1});
  CHECK(to_string(Partition::calibration) == "calibration");
}

TEST_CASE("score table: the same instance may appear in several folds") {
  auto t = parse_score_table(kHeader + "a,0,test,0.2,0\na,1,calibration,0.2,0\n");
  CHECK(t.rows.size() == 2);
}

TEST_CASE("score table: validation errors name the line") {
  CHECK_THROWS_AS(parse_score_table(kHeader + "a,0,test,1.2,1\n"), ValidationError);
  CHECK(message_of(kHeader + "a,0,test,0.5,1\nb,0,test,1.2,1\n").find("line 3") != std::string::npos);
  CHECK(message_of(kHeader + "a,0,test,0.5,1\na,0,calibration,0.1,0\n").find("duplicate") != std::string::npos);
  CHECK_THROWS_AS(parse_score_table(kHeader + "a,0,test,0.5,2\n"), ValidationError);
  CHECK_THROWS_AS(parse_score_table(kHeader + "a,0,train,0.5,1\n"), ParseError);
  CHECK_THROWS_AS(parse_score_table(kHeader + "a,x,test,0.5,1\n"), ParseError);
  CHECK_THROWS_AS(parse_score_table("id,fold,partition,score,label\n"), SchemaError);
  CHECK_THROWS(load_score_table("/nonexistent/scores.csv"));
}
