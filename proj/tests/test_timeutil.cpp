#include "doctest.h"
#include "opsqa/timeutil.hpp"

using namespace opsqa;

TEST_CASE("timestamp parse/format round trip") {
    auto ts = parse_timestamp("2015-01-02 03:00:00");
    REQUIRE(ts.has_value());
    CHECK(format_timestamp(*ts) == "2015-01-02 03:00:00");
    CHECK(format_hour_key(*ts) == "2015-01-02T03");

    auto t2 = parse_timestamp("2015-01-02T03:00:00");
    CHECK(t2 == ts);
}

TEST_CASE("hours_between spans day boundaries") {
    auto a = parse_timestamp("2014-12-13 06:00:00");
    auto b = parse_timestamp("2015-01-02 03:00:00");
    REQUIRE(a);
    REQUIRE(b);
    CHECK(hours_between(*a, *b) == doctest::Approx(477.0));
}

TEST_CASE("invalid timestamps are rejected") {
    CHECK(!parse_timestamp("not a time"));
    CHECK(!parse_timestamp("2015-13-01 00:00:00"));
    CHECK(!parse_timestamp("2015-01-01"));
}

TEST_CASE("ordering matches lexicographic form") {
    auto a = parse_timestamp("2015-01-01 23:00:00");
    auto b = parse_timestamp("2015-01-02 00:00:00");
    CHECK(*a < *b);
    CHECK(format_timestamp(*a) < format_timestamp(*b));
}
