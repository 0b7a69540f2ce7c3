#include <doctest.h>

#include <zlib.h>

#include <fstream>
#include <sstream>

#include "nutri/csv.hpp"
#include "nutri/errors.hpp"
#include "nutri/corpus.hpp"
#include "test_paths.hpp"

using namespace nutri;
using nutri::testing::data_dir;

namespace {

ParseReport parse(const std::string& text, const CorpusOptions& opts = {}) {
    std::istringstream in(text);
    return parse_submissions(in, opts);
}

RawSubmission raw(std::string id, std::string author, std::string title, std::int64_t t) {
    return RawSubmission{std::move(id), std::move(author), std::move(title), t, false};
}

Submission sub(std::string id, std::string author, std::int64_t t, std::string clean = "dish") {
    return Submission{std::move(id), std::move(author), t, "[Homemade] " + clean, PostTag::Homemade, clean};
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("parse: tolerant of malformed lines in short files") {
    const auto r = parse(
        R"({"id":"a","author":"u","title":"[Homemade] Pie","created_utc":1580000000})" "\n"
        "{not json\n"
        R"({"id":"b","author":"v","title":"[I ate] Soup","created_utc":"1580000100"})" "\n");
    CHECK(r.lines == 3);
    CHECK(r.malformed == 1);
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[1].created_utc == 1580000100);
}

TEST_CASE("parse: empty input, date range, null author, removal markers") {
    CHECK(parse("").records.empty());
    CHECK(parse("\n  \n").lines == 0);

    const auto r = parse(
        R"({"id":"old","author":"u","title":"[Homemade] Pie","created_utc":1451606400})" "\n"
        R"({"id":"n","author":null,"title":"[Homemade] Pie","created_utc":1580000000})" "\n"
        R"({"id":"m","author":"u","title":"[Homemade] Pie","created_utc":1580000000,"removed_by_category":"deleted"})" "\n"
        R"({"id":"k","author":"u","title":"[Homemade] Pie","created_utc":1580000000,"removed_by_category":null,"selftext":""})" "\n");
    CHECK(r.out_of_range == 1);
    REQUIRE(r.records.size() == 3);
    CHECK(r.records[0].author == "[deleted]");
    CHECK(r.records[1].removed);
    CHECK_FALSE(r.records[2].removed);
}

TEST_CASE("parse: schema violations are malformed") {
    const auto r = parse(
        R"({"id":5,"author":"u","title":"t","created_utc":1580000000})" "\n"
        R"({"id":"a","author":"u","created_utc":1580000000})" "\n"
        R"({"id":"a","author":"u","title":"t","created_utc":"soon"})" "\n"
        R"([1,2,3])" "\n");
    CHECK(r.malformed == 4);
    CHECK(r.records.empty());
}

TEST_CASE("parse: more than 1% malformed in a long file is a hard error") {
    std::string good;
    for (int i = 0; i < 98; ++i) {
        good += R"({"id":"x)" + std::to_string(i) + R"(","author":"u","title":"[Homemade] Pie","created_utc":1580000000})" "\n";
    }
    CHECK_NOTHROW(parse(good + "junk\n"));                // 1 of 99 lines, too short to judge
    CHECK_NOTHROW(parse(good + good.substr(0, good.find('\n') + 1) + "junk\n"));  // 1 of 100
    CHECK_THROWS_AS(parse(good + "junk\njunk\n"), DataError);                     // 2 of 100
}

TEST_CASE("parse: gzip dumps") {
    nutri::testing::ScratchDir dir;
    const std::string body = nutri::testing::slurp(data_dir() / "corpus" / "corpus_50.jsonl");
    const auto gz_path = dir / "dump.jsonl.gz";
    gzFile gz = gzopen(gz_path.c_str(), "wb");
    REQUIRE(gz);
    REQUIRE(gzwrite(gz, body.data(), static_cast<unsigned>(body.size())) == int(body.size()));
    gzclose(gz);

    const auto plain = parse_submission_file(data_dir() / "corpus" / "corpus_50.jsonl");
    const auto packed = parse_submission_file(gz_path);
    CHECK(plain.lines == 50);
    CHECK(packed.records == plain.records);
    CHECK_THROWS_AS(parse_submission_file(dir / "absent.jsonl"), IoError);
}

TEST_CASE("tag extraction") {
    CHECK(extract_tag("[Homemade] Lasagna") == TagMatch{PostTag::Homemade, "Lasagna"});
    CHECK(extract_tag("Pho [i ate]") == TagMatch{PostTag::IAte, "Pho"});
    CHECK(extract_tag("Beef  [ PRO / CHEF ]  Wellington") == TagMatch{PostTag::ProChef, "Beef Wellington"});
    CHECK(extract_tag("[IAte] Ramen") == TagMatch{PostTag::IAte, "Ramen"});
    CHECK_FALSE(extract_tag("Homemade lasagna"));
    CHECK_FALSE(extract_tag("(Homemade) pizza"));
    CHECK_FALSE(extract_tag("  [homemade]  "));
    CHECK(tag_name(PostTag::ProChef) == "Pro/Chef");
    CHECK(parse_tag_name("I ate") == PostTag::IAte);
    CHECK_FALSE(parse_tag_name("i ate"));
}

TEST_CASE("filter: deleted, untagged and duplicate posts") {
    const std::int64_t day = 1580000000 - 1580000000 % 86400;
    std::vector<RawSubmission> in{
        raw("late", "ann", "[Homemade] Pie", day + 5000),
        raw("early", "ann", "[Homemade] Pie", day + 100),
        raw("nextday", "ann", "[Homemade] Pie", day + 86400),
        raw("other", "bob", "[Homemade] Pie", day + 200),
        raw("gone", "[deleted]", "[Homemade] Pie", day),
        raw("rm", "cy", "[removed]", day),
        raw("plain", "cy", "Pie", day),
    };
    in.push_back(raw("flag", "cy", "[I ate] Soup", day));
    in.back().removed = true;

    const auto r = filter_submissions(in);
    CHECK(r.dropped_deleted == 3);
    CHECK(r.dropped_untagged == 1);
    CHECK(r.dropped_duplicate == 1);
    std::vector<std::string> ids;
    for (const auto& s : r.kept) ids.push_back(s.id);
    CHECK(ids == std::vector<std::string>{"early", "other", "nextday"});

    std::vector<RawSubmission> again;
    for (const auto& s : r.kept) again.push_back(to_raw(s));
    CHECK(filter_submissions(again).kept == r.kept);
}

TEST_CASE("ISO weeks around year boundaries") {
    auto at = [](int y, unsigned m, unsigned d) {
        using namespace std::chrono;
        return static_cast<std::int64_t>(
            sys_seconds{sys_days{year{y} / month{m} / day{d}}}.time_since_epoch().count() + 43200);
    };
    CHECK(iso_week(at(2020, 12, 28)).str() == "2020-W53");
    CHECK(iso_week(at(2021, 1, 3)).str() == "2020-W53");
    CHECK(iso_week(at(2021, 1, 4)).str() == "2021-W01");
    CHECK(iso_week(at(2019, 12, 30)).str() == "2020-W01");
    CHECK(iso_week(at(2017, 1, 1)).str() == "2016-W52");
    CHECK(iso_week(at(2020, 2, 26)).str() == "2020-W09");
    CHECK(iso_week(at(2018, 12, 31)).str() == "2019-W01");
    CHECK(utc_day(86399) == 0);
    CHECK(utc_day(86400) == 1);
    CHECK(utc_day(-1) == -1);
}

TEST_CASE("weekly activity and medians") {
    const std::int64_t mon = 1582502400;  // 2020-02-24, a Monday
    const std::vector<Submission> subs{sub("a", "x", mon), sub("b", "x", mon + 3600),
                                       sub("c", "y", mon + 86400 * 6), sub("d", "z", mon + 86400 * 7)};
    const auto act = weekly_activity(subs);
    REQUIRE(act.size() == 2);
    CHECK(act[0] == WeeklyActivity{{2020, 9}, 3, 2});
    CHECK(act[1] == WeeklyActivity{{2020, 10}, 1, 1});
    CHECK_THROWS_AS(weekly_activity({}), DataError);

    std::unordered_map<std::string, NutrientEstimate> est;
    est["a"].nutrients = {100.0, 5.0, {}, {}};
    est["c"].nutrients = {200.0, {}, {}, {}};
    const auto med = weekly_medians(subs, est);
    REQUIRE(med.size() == 2);
    CHECK(*med[0].medians.calories == 150.0);
    CHECK(*med[0].medians.protein == 5.0);
    CHECK_FALSE(med[0].medians.fat);
    CHECK(med[0].covered_posts == 2);
    CHECK(med[1].covered_posts == 0);
    CHECK_FALSE(med[1].medians.calories);

    std::ostringstream out;
    write_weekly_nutrients_csv(med, out);
    CHECK(out.str() ==
          "week,calories_median,protein_median,fat_median,carbs_median,covered_posts\n"
          "2020-W09,150,5,,,2\n"
          "2020-W10,,,,,0\n");
}

TEST_CASE("submissions CSV round trip") {
    std::vector<Submission> subs{sub("a", "x", 1580000000, "Mac, \"cheese\""), sub("b", "y", 1580000001)};
    subs[1].tag = PostTag::ProChef;
    std::stringstream io;
    write_submissions_csv(subs, io);
    CHECK(read_submissions_csv(io) == subs);
    std::istringstream bad("wrong,header\n");
    CHECK_THROWS_AS(read_submissions_csv(bad), FormatError);
}

TEST_CASE("50-post fixture matches the independent expectation") {
    const auto parsed = parse_submission_file(data_dir() / "corpus" / "corpus_50.jsonl");
    const auto filtered = filter_submissions(parsed.records);
    std::vector<std::string> ids;
    for (const auto& s : filtered.kept) ids.push_back(s.id);
    CHECK(ids == read_lines(data_dir() / "corpus" / "corpus_50_expected_ids.txt"));

    std::unordered_map<std::string, NutrientEstimate> est;
    for (const auto& s : filtered.kept) est[s.id].nutrients.calories = 10.0 * double(s.clean_title.size());
    const auto act = weekly_activity(filtered.kept);
    const auto med = weekly_medians(filtered.kept, est);

    std::ifstream expected(data_dir() / "corpus" / "corpus_50_expected_weekly.csv");
    csv::Reader reader(expected);
    std::vector<std::string> row;
    REQUIRE(reader.next(row));
    std::size_t i = 0;
    while (reader.next(row)) {
        REQUIRE(i < act.size());
        CHECK(act[i].week.str() == row[0]);
        CHECK(std::to_string(act[i].posts) == row[1]);
        CHECK(std::to_string(act[i].unique_authors) == row[2]);
        CHECK(med[i].medians.calories == csv::parse_number(row[3]));
        ++i;
    }
    CHECK(i == act.size());
}
