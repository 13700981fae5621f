#pragma once

// CSV artifacts shared by the CLI and the pipeline. Every file starts with a
// header row.
//   scores:      t,pattern,score
//   detections:  t,pattern,score,detected
//   features:    t,track_id,v0,...,v{d-1}
//   innovation:  t,track_id,l1,peak
//   sequences:   t,value            (HMM observations or decoded states)
//   timeline:    t,<label 0>,<label 1>,...   (0/1 presence)

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "semgraph/hmm.hpp"
#include "semgraph/integrator.hpp"
#include "semgraph/simkit.hpp"
#include "semgraph/subspace.hpp"

namespace semgraph::formats {

/// Splits one CSV line on commas (no quoting).
std::vector<std::string> split_csv(const std::string& line);

/// Pattern names resolve against `labels`; bare integers are accepted as
/// pattern indices. Streams come back ordered by pattern.
std::vector<integrator::ScoreStream> read_scores(std::istream& in, const std::vector<std::string>& labels);
void write_scores(std::ostream& out, const std::vector<integrator::ScoreStream>& streams,
                  const std::vector<std::string>& labels);
void write_detections(std::ostream& out, const std::vector<integrator::ScoreStream>& streams,
                      const std::vector<std::vector<bool>>& detected, const std::vector<std::string>& labels);

/// Rows grouped per track in file order; frame_ids keep each row's t.
std::map<std::int64_t, subspace::FeatureWindow> read_features(std::istream& in);
void write_features(std::ostream& out, const std::map<std::int64_t, subspace::FeatureWindow>& tracks);

struct InnovationRow {
  std::int64_t t = 0;
  std::int64_t track_id = 0;
  double l1 = 0.0;
  bool peak = false;
};
void write_innovation(std::ostream& out, const std::vector<InnovationRow>& rows);

std::vector<std::size_t> read_sequence(std::istream& in);
void write_sequence(std::ostream& out, const std::vector<std::size_t>& values);

simkit::Timeline read_timeline(std::istream& in);
void write_timeline(std::ostream& out, const simkit::Timeline& timeline, const std::vector<std::string>& labels);

}  // namespace semgraph::formats
