#include "tsmt/metrics/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>


namespace tsmt::metrics {

namespace {

void check_sequence(const EvalSequence& s) {
  s.pose.validate();
  if (s.pose.frame_count() < 3) {
    throw std::invalid_argument("sequence " + s.id + ": needs at least 3 frames for the metrics");
  }
}

void accumulate(BeatSummary& sum, const BeatScores& b) {
  sum.mean.precision += b.precision;
  sum.mean.recall += b.recall;
  sum.mean.f_score += b.f_score;
  sum.mean.matches += b.matches;
  ++sum.pairs;
}

void finish(BeatSummary& sum) {
  if (sum.pairs == 0) return;
  const double n = static_cast<double>(sum.pairs);
  sum.mean.precision /= n;
  sum.mean.recall /= n;
  sum.mean.f_score /= n;
}

Array stack(const std::vector<std::vector<double>>& rows) {
  const std::size_t d = rows.front().size();
  Array out({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), out.data() + i * d);
  return out;
}

nlohmann::json score_json(const Score& s) {
  return {{"value", s.defined ? nlohmann::json(s.value) : nlohmann::json(nullptr)}, {"defined", s.defined}};
}

nlohmann::json beats_json(const BeatSummary& b) {
  return {{"precision", b.mean.precision},
          {"recall", b.mean.recall},
          {"f_score", b.mean.f_score},
          {"matches", b.mean.matches},
          {"pairs", b.pairs},
          {"defined", b.defined()}};
}

}  // namespace

MetricReport evaluate(std::span<const EvalSequence> generated, std::span<const EvalSequence> reference,
                      const StyleClassifier* classifier, const MetricOptions& options) {
  if (generated.empty()) throw std::invalid_argument("evaluate: no generated sequences");
  options.limits.validate();
  if (options.chunk_frames == 0) throw std::invalid_argument("evaluate: chunk length must be positive");
  for (const auto& s : generated) check_sequence(s);
  for (const auto& s : reference) check_sequence(s);

  MetricReport r;
  r.generated = generated.size();
  r.reference = reference.size();
  r.options = options;

  const std::size_t n = generated.size();
  std::vector<double> auth(n), coh(n);
  std::vector<std::vector<std::size_t>> beats(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < n; ++i) {
    auth[i] = authenticity(generated[i].pose, options.limits);
    coh[i] = coherence(generated[i].pose, options.limits);
    beats[i] = extract_motion_beats(generated[i].pose);
  }
  // Summing before dividing keeps a mean of ones at exactly one.
  for (std::size_t i = 0; i < n; ++i) {
    r.authenticity += auth[i];
    r.coherence += coh[i];
  }
  r.authenticity /= static_cast<double>(n);
  r.coherence /= static_cast<double>(n);

  std::map<std::string, std::size_t> ref_index;
  for (std::size_t i = 0; i < reference.size(); ++i) ref_index.emplace(reference[i].id, i);
  for (std::size_t i = 0; i < n; ++i) {
    const EvalSequence& g = generated[i];
    const std::string& ref_id = g.reference_id.empty() ? g.id : g.reference_id;
    const auto it = ref_index.find(ref_id);
    if (it != ref_index.end() || !g.reference_id.empty()) {
      if (it == ref_index.end()) {
        r.warnings.push_back("sequence " + g.id + ": reference " + g.reference_id + " not found");
      } else {
        accumulate(r.motion_vs_reference,
                   beat_scores(extract_motion_beats(reference[it->second].pose), beats[i], options.beat_tolerance));
      }
    }
    if (g.music_beats) accumulate(r.music_vs_motion, beat_scores(*g.music_beats, beats[i], options.beat_tolerance));
  }
  finish(r.motion_vs_reference);
  finish(r.music_vs_motion);
  if (!r.motion_vs_reference.defined()) r.warnings.push_back("no generated sequence has a reference; motion beat scores n/a");
  if (!r.music_vs_motion.defined()) r.warnings.push_back("no music beats supplied; music beat scores n/a");

  if (classifier == nullptr) {
    r.warnings.push_back("no style classifier; FID and diversity scores n/a");
    return r;
  }
  r.feature_dim = classifier->config.stream.model_dim;
  std::vector<std::vector<double>> gen_features(n), ref_features(reference.size());
  std::vector<std::vector<std::vector<double>>> chunks(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < n; ++i) {
    gen_features[i] = classifier_features(*classifier, generated[i].pose);
    const std::size_t T = generated[i].pose.frame_count();
    for (std::size_t start = 0; start + options.chunk_frames <= T; start += options.chunk_frames) {
      chunks[i].push_back(classifier_features(*classifier, generated[i].pose.slice(start, options.chunk_frames)));
    }
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < reference.size(); ++i) ref_features[i] = classifier_features(*classifier, reference[i].pose);

  if (n >= 2 && reference.size() >= 2) {
    r.fid = {fid(stack(gen_features), stack(ref_features), &r.warnings), true};
  } else {
    r.warnings.push_back("FID needs at least 2 generated and 2 reference sequences");
  }
  r.a_seq_d = a_seq_d(gen_features, options.diversity_pairs, options.seed);
  if (!r.a_seq_d.defined) r.warnings.push_back("A-seq-D needs at least 2 sequences");
  r.i_seq_d = i_seq_d(chunks);
  if (!r.i_seq_d.defined) r.warnings.push_back("I-seq-D needs a sequence of at least 2 chunks");
  std::vector<std::string> groups;
  for (const auto& g : generated) groups.push_back(g.music.empty() ? g.id : g.music);
  r.s_music_d = s_music_d(gen_features, groups);
  if (!r.s_music_d.defined) r.warnings.push_back("S-music-D needs 2 generations of the same music");
  return r;
}

nlohmann::json report_to_json(const MetricReport& r) {
  nlohmann::json limits = nlohmann::json::object();
  for (std::size_t j = 0; j < kInteriorJoints; ++j) {
    const JointLimit& l = r.options.limits.limits[j];
    limits[interior_joints()[j].name] = {
        {"min_degrees", l.min_degrees}, {"max_degrees", l.max_degrees}, {"max_speed", l.max_speed}};
  }
  return {{"counts", {{"generated", r.generated}, {"reference", r.reference}}},
          {"authenticity", r.authenticity},
          {"coherence", r.coherence},
          {"beats", {{"motion_vs_reference", beats_json(r.motion_vs_reference)},
                     {"music_vs_motion", beats_json(r.music_vs_motion)}}},
          {"fid", score_json(r.fid)},
          {"a_seq_d", score_json(r.a_seq_d)},
          {"i_seq_d", score_json(r.i_seq_d)},
          {"s_music_d", score_json(r.s_music_d)},
          {"feature_dim", r.feature_dim},
          {"config",
           {{"beat_tolerance", r.options.beat_tolerance},
            {"diversity_pairs", r.options.diversity_pairs},
            {"chunk_frames", r.options.chunk_frames},
            {"seed", r.options.seed},
            {"joint_limits", limits}}},
          {"warnings", r.warnings}};
}

std::string report_table(const MetricReport& r) {
  std::vector<std::pair<std::string, std::string>> rows;
  const auto num = [](double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
  };
  const auto score = [&](const Score& s) { return s.defined ? num(s.value) : std::string("n/a"); };
  const auto beat = [&](const BeatSummary& b, double BeatScores::*field) {
    return b.defined() ? num(b.mean.*field) : std::string("n/a");
  };
  rows.emplace_back("generated sequences", std::to_string(r.generated));
  rows.emplace_back("reference sequences", std::to_string(r.reference));
  rows.emplace_back("authenticity", num(r.authenticity));
  rows.emplace_back("coherence", num(r.coherence));
  rows.emplace_back("beat precision (motion vs reference)", beat(r.motion_vs_reference, &BeatScores::precision));
  rows.emplace_back("beat recall (motion vs reference)", beat(r.motion_vs_reference, &BeatScores::recall));
  rows.emplace_back("beat F-score (motion vs reference)", beat(r.motion_vs_reference, &BeatScores::f_score));
  rows.emplace_back("beat precision (music vs motion)", beat(r.music_vs_motion, &BeatScores::precision));
  rows.emplace_back("beat recall (music vs motion)", beat(r.music_vs_motion, &BeatScores::recall));
  rows.emplace_back("beat F-score (music vs motion)", beat(r.music_vs_motion, &BeatScores::f_score));
  rows.emplace_back("FID", score(r.fid));
  rows.emplace_back("A-seq-D", score(r.a_seq_d));
  rows.emplace_back("I-seq-D", score(r.i_seq_d));
  rows.emplace_back("S-music-D", score(r.s_music_d));
  std::size_t width = 0;
  for (const auto& [k, _] : rows) width = std::max(width, k.size());
  std::ostringstream os;
  for (const auto& [k, v] : rows) os << std::left << std::setw(static_cast<int>(width) + 2) << k << v << '\n';
  for (const auto& w : r.warnings) os << "warning: " << w << '\n';
  return os.str();
}

}  // namespace tsmt::metrics
