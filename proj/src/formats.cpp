#include "semgraph/formats.hpp"

#include <algorithm>
#include <charconv>
#include <iomanip>
#include <istream>
#include <ostream>

#include "semgraph/errors.hpp"

namespace semgraph::formats {

namespace {

template <typename T>
T parse_number(const std::string& field, const char* what) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) throw InputError(std::string("bad ") + what + " field: '" + field + "'");
  return value;
}

// Yields data rows, skipping the header and blank lines.
std::vector<std::vector<std::string>> rows(std::istream& in, std::size_t min_fields) {
  std::vector<std::vector<std::string>> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto fields = split_csv(line);
    if (fields.size() < min_fields) throw InputError("CSV row has too few fields: '" + line + "'");
    out.push_back(std::move(fields));
  }
  return out;
}

std::ostream& precise(std::ostream& out) { return out << std::setprecision(17); }

}  // namespace

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<integrator::ScoreStream> read_scores(std::istream& in, const std::vector<std::string>& labels) {
  std::map<std::size_t, integrator::ScoreStream> by_pattern;
  for (const auto& f : rows(in, 3)) {
    std::size_t pattern = 0;
    if (auto it = std::find(labels.begin(), labels.end(), f[1]); it != labels.end()) {
      pattern = static_cast<std::size_t>(it - labels.begin());
    } else {
      pattern = parse_number<std::size_t>(f[1], "pattern");
    }
    auto& s = by_pattern[pattern];
    s.pattern = pattern;
    s.frames.push_back({parse_number<std::int64_t>(f[0], "t"), parse_number<double>(f[2], "score")});
  }
  std::vector<integrator::ScoreStream> out;
  for (auto& [p, s] : by_pattern) out.push_back(std::move(s));
  return out;
}

namespace {

std::string label_of(std::size_t pattern, const std::vector<std::string>& labels) {
  return pattern < labels.size() ? labels[pattern] : std::to_string(pattern);
}

}  // namespace

void write_scores(std::ostream& out, const std::vector<integrator::ScoreStream>& streams,
                  const std::vector<std::string>& labels) {
  precise(out) << "t,pattern,score\n";
  for (const auto& s : streams) {
    for (const auto& f : s.frames) out << f.t << ',' << label_of(s.pattern, labels) << ',' << f.score << '\n';
  }
}

void write_detections(std::ostream& out, const std::vector<integrator::ScoreStream>& streams,
                      const std::vector<std::vector<bool>>& detected, const std::vector<std::string>& labels) {
  precise(out) << "t,pattern,score,detected\n";
  for (std::size_t i = 0; i < streams.size(); ++i) {
    const auto& s = streams[i];
    for (std::size_t k = 0; k < s.frames.size(); ++k) {
      out << s.frames[k].t << ',' << label_of(s.pattern, labels) << ',' << s.frames[k].score << ','
          << (detected[i][k] ? 1 : 0) << '\n';
    }
  }
}

std::map<std::int64_t, subspace::FeatureWindow> read_features(std::istream& in) {
  std::map<std::int64_t, std::vector<std::vector<double>>> data;
  std::map<std::int64_t, subspace::FeatureWindow> out;
  std::size_t dim = 0;
  for (const auto& f : rows(in, 3)) {
    if (dim == 0) dim = f.size() - 2;
    if (f.size() - 2 != dim) throw InputError("feature rows differ in dimension");
    const auto id = parse_number<std::int64_t>(f[1], "track_id");
    auto& w = out[id];
    w.track_id = id;
    w.frame_ids.push_back(parse_number<std::int64_t>(f[0], "t"));
    std::vector<double> row(dim);
    for (std::size_t c = 0; c < dim; ++c) row[c] = parse_number<double>(f[c + 2], "feature");
    data[id].push_back(std::move(row));
  }
  for (auto& [id, w] : out) {
    const auto& r = data[id];
    w.data.resize(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < r.size(); ++i) {
      for (std::size_t c = 0; c < dim; ++c) w.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = r[i][c];
    }
  }
  return out;
}

void write_features(std::ostream& out, const std::map<std::int64_t, subspace::FeatureWindow>& tracks) {
  const Eigen::Index dim = tracks.empty() ? 0 : tracks.begin()->second.data.cols();
  precise(out) << "t,track_id";
  for (Eigen::Index c = 0; c < dim; ++c) out << ",v" << c;
  out << '\n';
  for (const auto& [id, w] : tracks) {
    for (Eigen::Index r = 0; r < w.data.rows(); ++r) {
      out << w.frame_ids[static_cast<std::size_t>(r)] << ',' << id;
      for (Eigen::Index c = 0; c < w.data.cols(); ++c) out << ',' << w.data(r, c);
      out << '\n';
    }
  }
}

void write_innovation(std::ostream& out, const std::vector<InnovationRow>& rows) {
  precise(out) << "t,track_id,l1,peak\n";
  for (const auto& r : rows) out << r.t << ',' << r.track_id << ',' << r.l1 << ',' << (r.peak ? 1 : 0) << '\n';
}

std::vector<std::size_t> read_sequence(std::istream& in) {
  std::vector<std::size_t> out;
  for (const auto& f : rows(in, 2)) out.push_back(parse_number<std::size_t>(f[1], "value"));
  return out;
}

void write_sequence(std::ostream& out, const std::vector<std::size_t>& values) {
  out << "t,value\n";
  for (std::size_t t = 0; t < values.size(); ++t) out << t << ',' << values[t] << '\n';
}

simkit::Timeline read_timeline(std::istream& in) {
  simkit::Timeline out;
  for (const auto& f : rows(in, 2)) {
    if (out.present.empty()) out.present.resize(f.size() - 1);
    if (f.size() - 1 != out.present.size()) throw InputError("timeline rows differ in width");
    for (std::size_t i = 0; i + 1 < f.size(); ++i) out.present[i].push_back(parse_number<int>(f[i + 1], "presence") != 0);
    ++out.frames;
  }
  return out;
}

void write_timeline(std::ostream& out, const simkit::Timeline& timeline, const std::vector<std::string>& labels) {
  out << 't';
  for (std::size_t i = 0; i < timeline.present.size(); ++i) out << ',' << label_of(i, labels);
  out << '\n';
  for (std::size_t t = 0; t < timeline.frames; ++t) {
    out << t;
    for (const auto& track : timeline.present) out << ',' << (track[t] ? 1 : 0);
    out << '\n';
  }
}

}  // namespace semgraph::formats
