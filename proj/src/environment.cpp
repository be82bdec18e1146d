#include "cascade/environment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cascade/errors.hpp"

namespace cascade {

EnvironmentSpec::EnvironmentSpec(std::size_t item_count, std::size_t list_length,
                                 std::vector<SegmentSpec> segments)
    : items_(item_count), list_length_(list_length), segments_(std::move(segments)) {
    if (items_ == 0) throw ValidationError("environment needs at least one item");
    if (list_length_ == 0 || list_length_ > items_) {
        throw ValidationError("list length K=" + std::to_string(list_length_) +
                              " must lie in [1, L=" + std::to_string(items_) + "]");
    }
    if (segments_.empty()) throw ValidationError("environment has no segments");
    std::size_t expected_start = 1;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const SegmentSpec& seg = segments_[i];
        const std::string where = "segment " + std::to_string(i + 1);
        if (seg.start != expected_start) {
            throw ValidationError(where + " starts at " + std::to_string(seg.start) +
                                  ", expected " + std::to_string(expected_start));
        }
        if (seg.end < seg.start) throw ValidationError(where + " ends before it starts");
        if (seg.w.size() != items_) {
            throw ValidationError(where + " has " + std::to_string(seg.w.size()) +
                                  " attractions, expected " + std::to_string(items_));
        }
        validate_attractions(seg.w);
        if (i > 0 && seg.w == segments_[i - 1].w) {
            throw ValidationError(where + " repeats the attractions of the previous segment");
        }
        expected_start = seg.end + 1;
    }
    optimal_rewards_.reserve(segments_.size());
    for (const auto& seg : segments_) {
        optimal_rewards_.push_back(optimal_expected_reward(seg.w, list_length_));
    }
}

std::vector<std::size_t> EnvironmentSpec::change_points() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i + 1 < segments_.size(); ++i) out.push_back(segments_[i].end);
    return out;
}

std::size_t EnvironmentSpec::segment_index(std::size_t t) const {
    if (t < 1 || t > horizon()) {
        throw ValidationError("slot " + std::to_string(t) + " outside [1, " +
                              std::to_string(horizon()) + "]");
    }
    auto it = std::lower_bound(segments_.begin(), segments_.end(), t,
                               [](const SegmentSpec& s, std::size_t slot) { return s.end < slot; });
    return static_cast<std::size_t>(it - segments_.begin());
}

ClickOutcome simulate_click(std::span<const double> w, const RecommendationList& list, Rng& rng) {
    ClickOutcome out;
    for (std::size_t pos = 0; pos < list.size(); ++pos) {
        if (rng.bernoulli(w[list[pos]])) {
            out.feedback.click = pos;
            out.reward = true;
            out.observed = pos + 1;
            return out;
        }
    }
    out.observed = list.size();
    return out;
}

double step_regret(const EnvironmentSpec& spec, std::size_t t, const RecommendationList& list) {
    const std::size_t seg = spec.segment_index(t);
    return spec.optimal_reward(seg) - expected_reward(list, spec.segments()[seg].w);
}

EnvironmentSpec make_synthetic(std::uint64_t seed) {
    constexpr std::size_t kItems = 10;
    constexpr std::size_t kList = 3;
    constexpr std::size_t kSegments = 10;
    constexpr std::size_t kSegmentLength = 2500;
    constexpr std::size_t kBoosted = 3;
    constexpr double kBoost = 0.9;

    Rng rng(seed);
    AttractionVector base = {0.80, 0.75, 0.70};
    for (std::size_t i = kList; i < kItems; ++i) base.push_back(rng.uniform(0.10, 0.50));

    std::vector<SegmentSpec> segments;
    for (std::size_t s = 0; s < kSegments; ++s) {
        SegmentSpec seg{s * kSegmentLength + 1, (s + 1) * kSegmentLength, base};
        if (s % 2 == 1) {
            std::vector<std::size_t> pool;
            for (std::size_t i = kList; i < kItems; ++i) pool.push_back(i);
            for (std::size_t j = 0; j < kBoosted; ++j) {
                const std::size_t pick = j + rng.below(pool.size() - j);
                std::swap(pool[j], pool[pick]);
                seg.w[pool[j]] = kBoost;
            }
        }
        segments.push_back(std::move(seg));
    }
    return EnvironmentSpec(kItems, kList, std::move(segments));
}

double hard_instance_epsilon(std::size_t items, std::size_t horizon) {
    const double L = static_cast<double>(items);
    const double T = static_cast<double>(horizon);
    return (L - 1.0) / (4.0 * std::sqrt(T * L * std::log(4.0 / 3.0)));
}

EnvironmentSpec make_hard_instance(std::size_t items, std::size_t list_length,
                                   std::size_t blocks, std::size_t horizon, std::uint64_t seed) {
    if (items < 3) throw ValidationError("hard instance needs L >= 3");
    if (blocks < 1) throw ValidationError("hard instance needs N >= 1");
    if (horizon < blocks) throw ValidationError("hard instance needs T >= N");
    const std::size_t block = (horizon + blocks - 1) / blocks;
    if ((blocks - 1) * block >= horizon) {
        throw ValidationError("N=" + std::to_string(blocks) + " blocks of length " +
                              std::to_string(block) + " leave no room for the last block in T=" +
                              std::to_string(horizon));
    }
    const double eps = hard_instance_epsilon(items, horizon);
    if (eps > 0.5) throw ValidationError("hard instance gap exceeds 1/2; T is too small");

    Rng rng(seed);
    std::vector<SegmentSpec> segments;
    std::size_t best = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
        if (b == 0) {
            best = rng.below(items);
        } else {
            // Uniform over the L-1 items other than the previous best.
            const std::size_t r = rng.below(items - 1);
            best = r < best ? r : r + 1;
        }
        SegmentSpec seg;
        seg.start = b * block + 1;
        seg.end = b + 1 == blocks ? horizon : (b + 1) * block;
        seg.w.assign(items, 0.5);
        seg.w[best] = 0.5 + eps;
        segments.push_back(std::move(seg));
    }
    return EnvironmentSpec(items, list_length, std::move(segments));
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t begin = 0;
    while (true) {
        const auto comma = line.find(',', begin);
        cells.push_back(trim(std::string_view(line).substr(
            begin, comma == std::string::npos ? std::string::npos : comma - begin)));
        if (comma == std::string::npos) break;
        begin = comma + 1;
    }
    return cells;
}

template <typename T>
bool parse_number(const std::string& cell, T& out) {
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && !cell.empty();
}

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace

LoadedEnvironment parse_segments_csv(std::istream& in, const std::string& source,
                                     std::size_t list_length, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw ValidationError("probability scale must be a positive finite number");
    }
    std::vector<std::string> warnings;
    std::vector<SegmentSpec> segments;
    std::size_t items = 0;
    bool have_header = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (!have_header) {
            if (cells.size() < 3 || cells[0] != "start" || cells[1] != "end") {
                throw ParseError(source, line_no, "expected header start,end,w1,...,wL");
            }
            for (std::size_t i = 2; i < cells.size(); ++i) {
                if (cells[i] != "w" + std::to_string(i - 1)) {
                    throw ParseError(source, line_no,
                                     "header column " + std::to_string(i + 1) + " should be w" +
                                         std::to_string(i - 1) + ", got '" + cells[i] + "'");
                }
            }
            items = cells.size() - 2;
            have_header = true;
            continue;
        }
        if (cells.size() != items + 2) {
            throw ParseError(source, line_no,
                             "expected " + std::to_string(items + 2) + " columns, got " +
                                 std::to_string(cells.size()));
        }
        SegmentSpec seg;
        if (!parse_number(cells[0], seg.start) || !parse_number(cells[1], seg.end)) {
            throw ParseError(source, line_no, "start/end must be positive integers");
        }
        const std::size_t expected = segments.empty() ? 1 : segments.back().end + 1;
        if (seg.start != expected) {
            throw ParseError(source, line_no,
                             "segment starts at " + std::to_string(seg.start) + ", expected " +
                                 std::to_string(expected));
        }
        if (seg.end < seg.start) throw ParseError(source, line_no, "segment ends before it starts");
        seg.w.reserve(items);
        for (std::size_t i = 0; i < items; ++i) {
            double v = 0.0;
            if (!parse_number(cells[i + 2], v)) {
                throw ParseError(source, line_no, "w" + std::to_string(i + 1) + " is not a number: '" +
                                                      cells[i + 2] + "'");
            }
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ParseError(source, line_no,
                                 "w" + std::to_string(i + 1) + " = " + cells[i + 2] +
                                     " is not a probability");
            }
            v *= scale;
            if (v > 1.0) {
                warnings.push_back(source + ":" + std::to_string(line_no) + ": w" +
                                   std::to_string(i + 1) + " scaled to " + format_double(v) +
                                   ", clipped to 1");
                v = 1.0;
            }
            seg.w.push_back(v);
        }
        if (!segments.empty() && seg.w == segments.back().w) {
            throw ParseError(source, line_no,
                             "segment repeats the previous segment's attractions (not a change-point)");
        }
        segments.push_back(std::move(seg));
    }
    if (!have_header) throw ParseError(source, 0, "empty segment file");
    if (segments.empty()) throw ParseError(source, 0, "segment file has a header but no rows");
    try {
        return {EnvironmentSpec(items, list_length, std::move(segments)), std::move(warnings)};
    } catch (const ValidationError& e) {
        throw ParseError(source, 0, e.what());
    }
}

LoadedEnvironment load_segments_csv(const std::filesystem::path& path, std::size_t list_length,
                                    double scale) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    return parse_segments_csv(in, path.string(), list_length, scale);
}

void write_segments_csv(const EnvironmentSpec& spec, std::ostream& out) {
    out << "start,end";
    for (std::size_t i = 1; i <= spec.items(); ++i) out << ",w" << i;
    out << '\n';
    for (const auto& seg : spec.segments()) {
        out << seg.start << ',' << seg.end;
        for (double v : seg.w) out << ',' << format_double(v);
        out << '\n';
    }
}

void write_segments_csv(const EnvironmentSpec& spec, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_segments_csv(spec, out);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

Assumption2Report check_assumption2(const EnvironmentSpec& spec, double p, double delta) {
    if (!(p > 0.0 && p <= 1.0)) throw DomainError("p must lie in (0,1]");
    Assumption2Report report;
    report.beta = threshold_beta(spec.horizon(), delta);
    const auto& segs = spec.segments();
    const std::size_t n = segs.size();
    const double L = static_cast<double>(spec.items());

    for (std::size_t i = 0; i < n; ++i) {
        double gap = 0.0;
        for (std::size_t l = 0; l < spec.items(); ++l) {
            const double prev = i == 0 ? 0.0 : segs[i - 1].w[l];
            gap = std::max(gap, std::abs(segs[i].w[l] - prev));
        }
        report.change_magnitude.push_back(gap);
        const double d = gap > 0.0 ? std::ceil(4.0 * L * report.beta / (p * gap * gap) + L / p)
                                   : kInfinity;
        report.window.push_back(d);
    }

    for (std::size_t i = 1; i <= n; ++i) {
        SegmentRequirement req;
        req.segment = i;
        req.length = segs[i - 1].length();
        if (n > 1) {
            req.required = i < n ? 2.0 * std::max(report.window[i], report.window[i - 1])
                                 : 2.0 * report.window[n - 1];
            req.satisfied = static_cast<double>(req.length) >= req.required;
        }
        report.satisfied = report.satisfied && req.satisfied;
        report.segments.push_back(req);
    }
    return report;
}

}  // namespace cascade
