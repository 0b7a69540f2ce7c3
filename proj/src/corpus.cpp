#include "nutri/corpus.hpp"

#include <zlib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <tuple>

#include <json.hpp>

#include "nutri/csv.hpp"
#include "nutri/errors.hpp"
#include "nutri/stats.hpp"
#include "nutri/text.hpp"

namespace nutri {

namespace {

using json = nlohmann::json;

bool one_of(const std::vector<std::string>& list, std::string_view v) {
    return std::find(list.begin(), list.end(), v) != list.end();
}

std::optional<std::int64_t> as_timestamp(const json& v) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (!std::isfinite(d)) return std::nullopt;
        return static_cast<std::int64_t>(std::floor(d));
    }
    if (v.is_string()) {
        if (const auto d = csv::parse_number(v.get<std::string>())) {
            return static_cast<std::int64_t>(std::floor(*d));
        }
    }
    return std::nullopt;
}

bool truthy_marker(const json& v) {
    if (v.is_null()) return false;
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_string()) return !v.get<std::string>().empty();
    return true;
}

std::optional<RawSubmission> parse_line(const std::string& line, const DeletionSentinels& s) {
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (!j.is_object()) return std::nullopt;
    const auto id = j.find("id");
    const auto author = j.find("author");
    const auto title = j.find("title");
    const auto created = j.find("created_utc");
    if (id == j.end() || author == j.end() || title == j.end() || created == j.end()) {
        return std::nullopt;
    }
    if (!id->is_string() || !title->is_string()) return std::nullopt;

    RawSubmission r;
    r.id = id->get<std::string>();
    // pushshift occasionally writes a null author for deleted accounts
    r.author = author->is_string() ? author->get<std::string>()
                                   : (author->is_null() ? s.author.front() : std::string{});
    if (!author->is_string() && !author->is_null()) return std::nullopt;
    r.title = title->get<std::string>();
    const auto ts = as_timestamp(*created);
    if (!ts || r.id.empty()) return std::nullopt;
    r.created_utc = *ts;

    for (const auto& field : s.removed_fields) {
        if (auto it = j.find(field); it != j.end() && truthy_marker(*it)) r.removed = true;
    }
    if (auto it = j.find("selftext"); it != j.end() && it->is_string() &&
                                      one_of(s.selftext, it->get<std::string>())) {
        r.removed = true;
    }
    return r;
}

ParseReport parse_lines(const std::function<bool(std::string&)>& next_line,
                        const CorpusOptions& opts) {
    ParseReport report;
    std::string line;
    while (next_line(line)) {
        if (text::trim(line).empty()) continue;
        ++report.lines;
        auto rec = parse_line(line, opts.sentinels);
        if (!rec) {
            ++report.malformed;
            continue;
        }
        if (rec->created_utc < opts.begin_utc || rec->created_utc > opts.end_utc) {
            ++report.out_of_range;
            continue;
        }
        report.records.push_back(std::move(*rec));
    }
    if (report.lines >= opts.min_lines_for_fraction && report.lines > 0 &&
        static_cast<double>(report.malformed) >
            opts.max_malformed_fraction * static_cast<double>(report.lines)) {
        throw DataError(std::to_string(report.malformed) + " of " + std::to_string(report.lines) +
                        " dump lines are malformed; probably not a submission dump");
    }
    return report;
}

}  // namespace

ParseReport parse_submissions(std::istream& in, const CorpusOptions& opts) {
    return parse_lines([&](std::string& line) { return static_cast<bool>(std::getline(in, line)); },
                       opts);
}

ParseReport parse_submission_file(const std::filesystem::path& path, const CorpusOptions& opts) {
    if (path.extension() != ".gz") {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open dump " + path.string());
        return parse_submissions(in, opts);
    }

    gzFile gz = gzopen(path.c_str(), "rb");
    if (!gz) throw IoError("cannot open dump " + path.string());
    std::unique_ptr<gzFile_s, decltype(&gzclose)> guard(gz, &gzclose);
    gzbuffer(gz, 1 << 17);
    std::vector<char> buf(1 << 16);
    auto next = [&](std::string& line) {
        line.clear();
        while (true) {
            if (!gzgets(gz, buf.data(), static_cast<int>(buf.size()))) {
                int err = 0;
                gzerror(gz, &err);
                if (err != Z_OK && err != Z_STREAM_END) {
                    throw IoError("corrupt gzip stream in " + path.string());
                }
                return !line.empty();
            }
            line.append(buf.data());
            if (!line.empty() && line.back() == '\n') {
                line.pop_back();
                return true;
            }
        }
    };
    return parse_lines(next, opts);
}

// ---------------------------------------------------------------------------
// Tags
// ---------------------------------------------------------------------------

std::string_view tag_name(PostTag tag) {
    switch (tag) {
        case PostTag::Homemade: return "Homemade";
        case PostTag::IAte: return "I ate";
        case PostTag::ProChef: return "Pro/Chef";
    }
    return "unknown";
}

std::optional<PostTag> parse_tag_name(std::string_view s) {
    for (PostTag t : {PostTag::Homemade, PostTag::IAte, PostTag::ProChef}) {
        if (tag_name(t) == s) return t;
    }
    return std::nullopt;
}

std::optional<TagMatch> extract_tag(std::string_view raw_title) {
    static const std::regex pattern(R"(\[\s*(homemade|i\s*ate|pro\s*/\s*chef)\s*\])",
                                    std::regex::icase | std::regex::ECMAScript);
    const std::string title(raw_title);
    std::smatch m;
    if (!std::regex_search(title, m, pattern)) return std::nullopt;

    const std::string word = text::to_lower(m.str(1));
    PostTag tag = PostTag::Homemade;
    if (word.front() == 'i') tag = PostTag::IAte;
    if (word.front() == 'p') tag = PostTag::ProChef;

    std::string rest = m.prefix().str() + " " + m.suffix().str();
    std::string clean = text::collapse_whitespace(rest);
    if (clean.empty()) return std::nullopt;
    return TagMatch{tag, std::move(clean)};
}

// ---------------------------------------------------------------------------
// Filtering
// ---------------------------------------------------------------------------

RawSubmission to_raw(const Submission& s) {
    return RawSubmission{s.id, s.author, s.raw_title, s.created_utc, false};
}

std::int64_t utc_day(std::int64_t utc_seconds) {
    return utc_seconds >= 0 ? utc_seconds / 86400 : -((-utc_seconds + 86399) / 86400);
}

FilterReport filter_submissions(const std::vector<RawSubmission>& records,
                                const DeletionSentinels& sentinels) {
    FilterReport report;

    std::vector<Submission> tagged;
    for (const auto& r : records) {
        if (r.removed || one_of(sentinels.author, r.author) || one_of(sentinels.title, r.title)) {
            ++report.dropped_deleted;
            continue;
        }
        auto match = extract_tag(r.title);
        if (!match) {
            ++report.dropped_untagged;
            continue;
        }
        tagged.push_back(Submission{r.id, r.author, r.created_utc, r.title, match->tag,
                                    std::move(match->clean_title)});
    }

    std::sort(tagged.begin(), tagged.end(), [](const Submission& a, const Submission& b) {
        return std::tie(a.created_utc, a.id) < std::tie(b.created_utc, b.id);
    });

    std::set<std::tuple<std::string, std::int64_t, std::string>> seen;
    for (auto& s : tagged) {
        if (!seen.emplace(s.raw_title, utc_day(s.created_utc), s.author).second) {
            ++report.dropped_duplicate;
            continue;
        }
        report.kept.push_back(std::move(s));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Weekly series
// ---------------------------------------------------------------------------

std::string IsoWeek::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-W%02d", year, week);
    return buf;
}

IsoWeek iso_week(std::int64_t utc_seconds) {
    using namespace std::chrono;
    const std::int64_t day = utc_day(utc_seconds);
    // 1970-01-01 was a Thursday; Monday-based weekday index 0..6
    const std::int64_t weekday = ((day + 3) % 7 + 7) % 7;
    const sys_days thursday{days{day - weekday + 3}};
    const year_month_day ymd{thursday};
    const sys_days jan1{ymd.year() / January / 1};
    const auto day_of_year = (thursday - jan1).count();
    return IsoWeek{static_cast<int>(ymd.year()), static_cast<int>(day_of_year / 7 + 1)};
}

std::vector<WeeklyActivity> weekly_activity(const std::vector<Submission>& submissions) {
    if (submissions.empty()) throw DataError("weekly activity of an empty submission list");
    std::map<IsoWeek, std::pair<std::size_t, std::set<std::string>>> weeks;
    for (const auto& s : submissions) {
        auto& [posts, authors] = weeks[iso_week(s.created_utc)];
        ++posts;
        authors.insert(s.author);
    }
    std::vector<WeeklyActivity> out;
    out.reserve(weeks.size());
    for (const auto& [week, agg] : weeks) out.push_back({week, agg.first, agg.second.size()});
    return out;
}

std::vector<WeeklyNutrients> weekly_medians(
    const std::vector<Submission>& submissions,
    const std::unordered_map<std::string, NutrientEstimate>& estimates) {
    struct Bucket {
        std::map<Nutrient, std::vector<double>> values;
        std::size_t covered = 0;
    };
    std::map<IsoWeek, Bucket> weeks;
    for (const auto& s : submissions) {
        Bucket& b = weeks[iso_week(s.created_utc)];
        const auto it = estimates.find(s.id);
        if (it == estimates.end()) continue;
        ++b.covered;
        for (Nutrient n : kAllNutrients) {
            if (const auto& v = it->second.nutrients[n]) b.values[n].push_back(*v);
        }
    }

    std::vector<WeeklyNutrients> out;
    out.reserve(weeks.size());
    for (auto& [week, bucket] : weeks) {
        WeeklyNutrients row{week, {}, bucket.covered};
        for (auto& [n, values] : bucket.values) {
            if (!values.empty()) row.medians[n] = stats::median(std::move(values));
        }
        out.push_back(std::move(row));
    }
    return out;
}

void write_weekly_activity_csv(const std::vector<WeeklyActivity>& rows, std::ostream& out) {
    out << "week,posts,unique_authors\n";
    for (const auto& r : rows) {
        out << r.week.str() << ',' << r.posts << ',' << r.unique_authors << '\n';
    }
}

void write_weekly_nutrients_csv(const std::vector<WeeklyNutrients>& rows, std::ostream& out) {
    out << "week,calories_median,protein_median,fat_median,carbs_median,covered_posts\n";
    for (const auto& r : rows) {
        out << r.week.str();
        for (Nutrient n : kAllNutrients) out << ',' << csv::format_optional(r.medians[n]);
        out << ',' << r.covered_posts << '\n';
    }
}

void write_submissions_csv(const std::vector<Submission>& subs, std::ostream& out) {
    out << "id,author,created_utc,tag,raw_title,clean_title\n";
    for (const auto& s : subs) {
        out << csv::join_row({s.id, s.author, std::to_string(s.created_utc),
                              std::string(tag_name(s.tag)), s.raw_title, s.clean_title})
            << '\n';
    }
}

std::vector<Submission> read_submissions_csv(std::istream& in) {
    csv::Reader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row) || row.size() != 6 || row[0] != "id") {
        throw FormatError("submissions file: missing or unexpected header");
    }
    std::vector<Submission> out;
    while (reader.next(row)) {
        const std::string where = "submissions file line " + std::to_string(reader.line());
        if (row.size() != 6) throw FormatError(where + ": expected 6 fields");
        const auto ts = csv::parse_number(row[2]);
        const auto tag = parse_tag_name(row[3]);
        if (!ts || !tag) throw FormatError(where + ": bad timestamp or tag");
        out.push_back(Submission{row[0], row[1], static_cast<std::int64_t>(*ts), row[4], *tag,
                                 row[5]});
    }
    return out;
}

}  // namespace nutri
