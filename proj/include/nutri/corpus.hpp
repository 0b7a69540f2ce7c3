#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nutri/estimator.hpp"
#include "nutri/nutrients.hpp"

namespace nutri {

struct RawSubmission {
    std::string id;
    std::string author;
    std::string title;
    std::int64_t created_utc = 0;
    bool removed = false;  // explicit removal marker in the dump

    bool operator==(const RawSubmission&) const = default;
};

// Markers that identify deleted or removed posts. Dump vintages differ, so
// these are configuration rather than constants.
struct DeletionSentinels {
    std::vector<std::string> author = {"[deleted]"};
    std::vector<std::string> title = {"[deleted]", "[removed]"};
    std::vector<std::string> selftext = {"[deleted]", "[removed]"};
    // A non-null, non-false value in any of these fields marks removal.
    std::vector<std::string> removed_fields = {"removed_by_category", "removed"};
};

struct CorpusOptions {
    // Inclusive UTC bounds; defaults cover 2017-01-01 .. 2021-12-31.
    std::int64_t begin_utc = 1483228800;
    std::int64_t end_utc = 1640995199;
    double max_malformed_fraction = 0.01;
    // The malformed-fraction check only applies to files at least this long.
    std::size_t min_lines_for_fraction = 100;
    DeletionSentinels sentinels;
};

struct ParseReport {
    std::vector<RawSubmission> records;
    std::size_t lines = 0;  // non-blank
    std::size_t malformed = 0;
    std::size_t out_of_range = 0;
};

// Tolerant line-delimited JSON parse. Throws DataError when the malformed
// fraction exceeds the configured limit.
ParseReport parse_submissions(std::istream& in, const CorpusOptions& opts = {});

// Plain or gzip-compressed (.gz) dump file.
ParseReport parse_submission_file(const std::filesystem::path& path,
                                  const CorpusOptions& opts = {});

enum class PostTag { Homemade, IAte, ProChef };

std::string_view tag_name(PostTag tag);
std::optional<PostTag> parse_tag_name(std::string_view s);

struct TagMatch {
    PostTag tag;
    std::string clean_title;

    bool operator==(const TagMatch&) const = default;
};

// Case-insensitive [Homemade] / [I ate] / [Pro/Chef] anywhere in the title.
// nullopt when untagged or when nothing but the tag remains.
std::optional<TagMatch> extract_tag(std::string_view raw_title);

struct Submission {
    std::string id;
    std::string author;
    std::int64_t created_utc = 0;
    std::string raw_title;
    PostTag tag = PostTag::Homemade;
    std::string clean_title;

    bool operator==(const Submission&) const = default;
};

RawSubmission to_raw(const Submission& s);

struct FilterReport {
    std::vector<Submission> kept;  // sorted by created_utc, then id
    std::size_t dropped_deleted = 0;
    std::size_t dropped_untagged = 0;
    std::size_t dropped_duplicate = 0;
};

// Drops deleted posts, untagged posts and (title, UTC day, author)
// duplicates, keeping the earliest of each duplicate group.
FilterReport filter_submissions(const std::vector<RawSubmission>& records,
                                const DeletionSentinels& sentinels = {});

struct IsoWeek {
    int year = 0;
    int week = 0;

    std::string str() const;  // e.g. "2020-W09"
    auto operator<=>(const IsoWeek&) const = default;
};

IsoWeek iso_week(std::int64_t utc_seconds);

std::int64_t utc_day(std::int64_t utc_seconds);

struct WeeklyActivity {
    IsoWeek week;
    std::size_t posts = 0;
    std::size_t unique_authors = 0;

    bool operator==(const WeeklyActivity&) const = default;
};

// Throws DataError on empty input.
std::vector<WeeklyActivity> weekly_activity(const std::vector<Submission>& submissions);

struct WeeklyNutrients {
    IsoWeek week;
    NutrientVector medians;  // absent where the week has no covered value
    std::size_t covered_posts = 0;

    bool operator==(const WeeklyNutrients&) const = default;
};

// Estimates are keyed by submission id; posts without one are uncovered.
std::vector<WeeklyNutrients> weekly_medians(
    const std::vector<Submission>& submissions,
    const std::unordered_map<std::string, NutrientEstimate>& estimates);

void write_weekly_activity_csv(const std::vector<WeeklyActivity>& rows, std::ostream& out);
void write_weekly_nutrients_csv(const std::vector<WeeklyNutrients>& rows, std::ostream& out);

// id,author,created_utc,tag,raw_title,clean_title
void write_submissions_csv(const std::vector<Submission>& subs, std::ostream& out);
std::vector<Submission> read_submissions_csv(std::istream& in);

}  // namespace nutri
