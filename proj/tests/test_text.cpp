#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include <domprune/text.hpp>

using namespace domprune;

TEST_CASE("normalize_text folds case and collapses whitespace") {
    CHECK(normalize_text("  Hello   WORLD ") == "hello world");
    CHECK(normalize_text("Tab\tand\nnewline\r\n") == "tab and newline");
    CHECK(normalize_text("") == "");
    CHECK(normalize_text("   \t  ") == "");
    CHECK(normalize_text("already clean") == "already clean");
    CHECK(normalize_text("MiXeD") == "mixed");
}

TEST_CASE("normalize_text keeps non-ascii bytes intact") {
    CHECK(normalize_text("Caf\xc3\xa9  Menu") == "caf\xc3\xa9 menu");
}

TEST_CASE("tokenize splits on whitespace and punctuation") {
    CHECK(tokenize("book a flight!") == std::vector<std::string>{"book", "a", "flight"});
    CHECK(tokenize("sign-in now") == std::vector<std::string>{"sign", "in", "now"});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("...") == std::vector<std::string>{});
    CHECK(tokenize("a1 b2") == std::vector<std::string>{"a1", "b2"});
    CHECK(tokenize("caf\xc3\xa9 au lait") == std::vector<std::string>{"caf\xc3\xa9", "au", "lait"});
}

TEST_CASE("porter stemmer matches the published vocabulary") {
    CHECK(porter_stem("booking") == "book");
    CHECK(porter_stem("flights") == "flight");
    CHECK(porter_stem("relational") == "relat");
    CHECK(porter_stem("agreement") == "agreement");
    CHECK(porter_stem("oscillators") == "oscil");
    CHECK(porter_stem("caresses") == "caress");
    CHECK(porter_stem("ponies") == "poni");
    CHECK(porter_stem("cats") == "cat");
    CHECK(porter_stem("plastered") == "plaster");
    CHECK(porter_stem("motoring") == "motor");
    CHECK(porter_stem("hopping") == "hop");
    CHECK(porter_stem("happy") == "happi");
    CHECK(porter_stem("feed") == "feed");
    CHECK(porter_stem("agreed") == "agre");
    CHECK(porter_stem("search") == "search");
}

TEST_CASE("porter stemmer leaves short or non-alphabetic words alone") {
    CHECK(porter_stem("go") == "go");
    CHECK(porter_stem("s") == "s");
    CHECK(porter_stem("sky") == "sky");
    CHECK(porter_stem("web2") == "web2");
    CHECK(porter_stem("sign-in") == "sign-in");
}

TEST_CASE("normalize_and_stem composes the pipeline") {
    auto r = normalize_and_stem("Booking   Flights");
    CHECK(r.normalized == "booking flights");
    CHECK(r.tokens == std::vector<std::string>{"booking", "flights"});
    CHECK(r.stems == std::vector<std::string>{"book", "flight"});
}

TEST_CASE("edit_distance computes unit-cost Levenshtein") {
    CHECK(edit_distance("kitten", "sitting") == 3);
    CHECK(edit_distance("serach", "search") == 2);
    CHECK(edit_distance("", "abc") == 3);
    CHECK(edit_distance("abc", "") == 3);
    CHECK(edit_distance("abc", "abc") == 0);
    CHECK(edit_distance("flaw", "lawn") == 2);
    CHECK(edit_distance("", "") == 0);
}

TEST_CASE("similarity normalizes by the longer length") {
    CHECK(similarity("serach", "search") == Catch::Approx(2.0 / 3.0));
    CHECK(similarity("", "") == 1.0);
    CHECK(similarity("x", "") == 0.0);
    CHECK(similarity("same", "same") == 1.0);
}

TEST_CASE("fuzzy_score takes the best of whole text and tokens") {
    CHECK(fuzzy_score("serach", "search", {"search"}) == Catch::Approx(2.0 / 3.0));
    CHECK(fuzzy_score("x", "", {}) == 0.0);
    CHECK(fuzzy_score("book", "book a flight", {"book", "a", "flight"}) == 1.0);
    double whole_only = fuzzy_score("search flights", "search flights", {"search", "flights"});
    CHECK(whole_only == 1.0);
}

TEST_CASE("similarity is symmetric and bounded") {
    const std::vector<std::string> words = {"search", "serach", "flight", "fight", "", "a", "booking"};
    for (const auto& a : words)
        for (const auto& b : words) {
            double s = similarity(a, b);
            CHECK(s == similarity(b, a));
            CHECK(s >= 0.0);
            CHECK(s <= 1.0);
        }
}
