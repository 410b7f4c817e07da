#include <algorithm>

#include "doctest.h"
#include "qvoter/config.hpp"

using namespace qvoter;
using namespace std::literals;

namespace {

std::vector<std::string> errors_of(std::string_view text) {
  try {
    validate_config(text);
  } catch (const ConfigError& e) {
    return e.errors();
  }
  return {};
}

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
  return std::any_of(errors.begin(), errors.end(),
                     [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("empty config names the missing kind") {
  const auto errors = errors_of("{}");
  REQUIRE(errors.size() == 1);
  CHECK(errors[0] == "missing experiment kind");
}

TEST_CASE("minimal persistence config gets defaults") {
  const auto c = validate_config(R"({"kind": "persistence"})"sv);
  CHECK(c.kind == ExperimentKind::persistence);
  CHECK(c.q == 0.9);
  CHECK(c.u0 == 0.5);
  CHECK(c.sizes == std::vector<int>{16, 20, 26});
  CHECK(c.offsets.size() == 6);
  CHECK(c.echo.contains("kind"));
  CHECK(c.echo.contains("q"));
}

TEST_CASE("box size must divide the side") {
  const auto errors = errors_of(R"({"kind": "box-clt", "L": 15, "box_r": [4, 8, 16]})");
  CHECK(mentions(errors, "r must divide L (r=4, L=15)"));
  CHECK(mentions(errors, "r=8"));
}

TEST_CASE("every problem is reported together") {
  const auto errors = errors_of(R"({"kind": "persistence", "colour": 1, "q": "high", "L": 2.5})");
  CHECK(errors.size() >= 3);
  CHECK(mentions(errors, "unknown key 'colour'"));
  CHECK(mentions(errors, "key 'q' must be"));
  CHECK(mentions(errors, "key 'L' must be"));
}

TEST_CASE("unknown kind lists the valid ones") {
  const auto errors = errors_of(R"({"kind": "teleport"})");
  REQUIRE(errors.size() == 1);
  CHECK(mentions(errors, "persistence"));
}

TEST_CASE("malformed JSON is a config error") {
  CHECK_THROWS_AS(validate_config(std::string_view("{\"kind\": ")), ConfigError);
}

TEST_CASE("kind names round trip") {
  for (const auto& name : kind_names()) {
    const auto k = parse_kind(name);
    REQUIRE(k.has_value());
    CHECK(kind_name(*k) == name);
  }
  CHECK_FALSE(parse_kind("nothing").has_value());
  CHECK(std::find(config_keys().begin(), config_keys().end(), "seed") != config_keys().end());
}
