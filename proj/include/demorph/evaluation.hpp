#pragma once

#include "demorph/manifest.hpp"
#include "demorph/matcher.hpp"
#include "demorph/metrics.hpp"
#include "demorph/tensor.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace demorph {

// Output-to-ground-truth assignment: straight pairs (o1,i1),(o2,i2); crossed
// pairs (o1,i2),(o2,i1). The assignment with the larger similarity sum wins;
// an exact tie resolves to straight.
struct PairingDecision {
    bool straight = true;
    double sum_straight = 0.0;
    double sum_crossed = 0.0;
    double sim[2][2] = {{0, 0}, {0, 0}};  // sim[j][k] = B(o_j, i_k)
};

inline PairingDecision pair_outputs_from_matrix(const double sim[2][2]) {
    PairingDecision d;
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) d.sim[j][k] = sim[j][k];
    d.sum_straight = sim[0][0] + sim[1][1];
    d.sum_crossed = sim[0][1] + sim[1][0];
    d.straight = d.sum_straight >= d.sum_crossed;
    return d;
}

inline PairingDecision pair_outputs(const Tensor<float>& o1, const Tensor<float>& o2, const Tensor<float>& i1,
                                    const Tensor<float>& i2, const MatcherBackend& backend) {
    const Embedding eo1 = external_embed(o1, backend), eo2 = external_embed(o2, backend);
    const Embedding ei1 = external_embed(i1, backend), ei2 = external_embed(i2, backend);
    const double sim[2][2] = {{similarity(eo1, ei1), similarity(eo1, ei2)},
                              {similarity(eo2, ei1), similarity(eo2, ei2)}};
    return pair_outputs_from_matrix(sim);
}

// TMR at a fixed FMR level. The operating threshold is the smallest value
// from the impostor score set (falling back to +inf) such that the fraction
// of impostor scores strictly above it is at most fmr_level; TMR is the
// fraction of genuine scores at or above that threshold. This is the
// empirical ROC convention: impostors match above the threshold, genuines
// match at or above it.
inline double tmr_at_fmr(const std::vector<double>& genuine, const std::vector<double>& impostor, double fmr_level) {
    if (genuine.empty() || impostor.empty()) throw std::invalid_argument("tmr_at_fmr: empty score list");
    if (!(fmr_level > 0.0 && fmr_level < 1.0)) throw std::invalid_argument("tmr_at_fmr: fmr_level must be in (0,1)");
    std::vector<double> cand = impostor;
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    double threshold = std::numeric_limits<double>::infinity();
    for (double c : cand) {
        long n = std::count_if(impostor.begin(), impostor.end(), [&](double s) { return s > c; });
        if (static_cast<double>(n) / static_cast<double>(impostor.size()) <= fmr_level) {
            threshold = c;
            break;
        }
    }
    const long hits = std::count_if(genuine.begin(), genuine.end(), [&](double s) { return s >= threshold; });
    return static_cast<double>(hits) / static_cast<double>(genuine.size());
}

// Fraction of genuine scores at or above a fixed matching threshold.
inline double restoration_accuracy(const std::vector<double>& genuine, double threshold) {
    if (genuine.empty()) throw std::invalid_argument("restoration_accuracy: empty score list");
    const long hits = std::count_if(genuine.begin(), genuine.end(), [&](double s) { return s >= threshold; });
    return static_cast<double>(hits) / static_cast<double>(genuine.size());
}

// Demorphing success conditions. The first requires the two outputs to look
// dissimilar to each other (guards against morph replication); the second
// requires every output to match some ground-truth constituent:
//   cond_distinct:  B(o1, o2) < theta
//   cond_match:     min_j max_k B(o_j, i_k) > epsilon
struct ConditionReport {
    double output_similarity = 0.0;  // B(o1, o2)
    bool distinct_ok = false;
    double match_minmax = 0.0;  // min over outputs of best ground-truth match
    bool match_ok = false;
};

inline ConditionReport check_demorph_conditions(const Tensor<float>& o1, const Tensor<float>& o2,
                                                const Tensor<float>& i1, const Tensor<float>& i2, double theta,
                                                double epsilon, const MatcherBackend& backend) {
    const Embedding eo1 = external_embed(o1, backend), eo2 = external_embed(o2, backend);
    const Embedding ei1 = external_embed(i1, backend), ei2 = external_embed(i2, backend);
    ConditionReport r;
    r.output_similarity = similarity(eo1, eo2);
    r.distinct_ok = r.output_similarity < theta;
    const double m1 = std::max(similarity(eo1, ei1), similarity(eo1, ei2));
    const double m2 = std::max(similarity(eo2, ei1), similarity(eo2, ei2));
    r.match_minmax = std::min(m1, m2);
    r.match_ok = r.match_minmax > epsilon;
    return r;
}

// One demorphing result to be scored.
struct EvalInput {
    MorphRecord record;
    Tensor<float> morph, o1, o2, i1, i2;
};

struct GalleryEntry {
    std::string identity;
    Embedding embedding;
};

// Gallery = identity-labeled embeddings the impostor search scans. For
// desk-scale runs this is the test-split ground-truth pool; it is injectable
// for runs against real databases.
inline std::vector<GalleryEntry> build_gallery(const std::vector<std::pair<std::string, Tensor<float>>>& images,
                                               const MatcherBackend& backend) {
    std::vector<GalleryEntry> g;
    g.reserve(images.size());
    for (const auto& [id, img] : images) g.push_back({id, external_embed(img, backend)});
    return g;
}

struct PerRecordRow {
    std::string morph_path;
    bool paired_straight = true;
    double genuine1 = 0, genuine2 = 0;
    double impostor1 = 0, impostor2 = 0;
    double psnr_db = 0, ssim_val = 0;
    bool distinct_ok = false, match_ok = false;
};

struct EvalConfig {
    std::vector<double> fmr_levels = {0.01, 0.05, 0.10};
    double ra_threshold = 0.4;
    double theta = 0.4;
    double epsilon = 0.4;
};

struct EvaluationReport {
    std::vector<double> genuine_scores;
    std::vector<double> impostor_scores;
    std::map<double, double> tmr;  // fmr level -> TMR
    double ra = 0.0;
    double psnr_mean = 0.0;
    double ssim_mean = 0.0;
    std::vector<PerRecordRow> per_record;
    EvalConfig config;
    std::string matcher_name;
};

// Genuine and impostor scores for one record's two outputs. The impostor
// search excludes the record's own identities from the gallery; an empty
// post-exclusion gallery is a contract error.
inline std::pair<std::array<double, 2>, std::array<double, 2>> genuine_impostor_for_record(
    const EvalInput& in, const std::vector<GalleryEntry>& gallery, const MatcherBackend& backend,
    PairingDecision* decision_out = nullptr) {
    const PairingDecision d = pair_outputs(in.o1, in.o2, in.i1, in.i2, backend);
    if (decision_out) *decision_out = d;
    std::array<double, 2> genuine{};
    if (d.straight) {
        genuine[0] = d.sim[0][0];
        genuine[1] = d.sim[1][1];
    } else {
        genuine[0] = d.sim[0][1];
        genuine[1] = d.sim[1][0];
    }
    const Embedding eo[2] = {external_embed(in.o1, backend), external_embed(in.o2, backend)};
    std::array<double, 2> impostor{-1.0, -1.0};
    bool any = false;
    for (const auto& g : gallery) {
        if (g.identity == in.record.id_a || g.identity == in.record.id_b) continue;
        any = true;
        for (int j = 0; j < 2; ++j) impostor[j] = std::max(impostor[j], similarity(eo[j], g.embedding));
    }
    if (!any) throw std::invalid_argument("genuine_impostor: gallery empty after excluding record identities");
    return {genuine, impostor};
}

inline std::pair<std::vector<double>, std::vector<double>> genuine_impostor_scores(
    const std::vector<EvalInput>& results, const std::vector<GalleryEntry>& gallery, const MatcherBackend& backend) {
    std::vector<double> genuine, impostor;
    for (const auto& in : results) {
        auto [g, imp] = genuine_impostor_for_record(in, gallery, backend);
        genuine.insert(genuine.end(), g.begin(), g.end());
        impostor.insert(impostor.end(), imp.begin(), imp.end());
    }
    return {genuine, impostor};
}

inline EvaluationReport build_report(const std::vector<EvalInput>& results, const std::vector<GalleryEntry>& gallery,
                                     const MatcherBackend& backend, const EvalConfig& cfg) {
    if (results.empty()) throw std::invalid_argument("build_report: no results to evaluate");
    EvaluationReport rep;
    rep.config = cfg;
    rep.matcher_name = backend.name();
    double psnr_sum = 0, ssim_sum = 0;
    for (const auto& in : results) {
        PairingDecision d;
        auto [g, imp] = genuine_impostor_for_record(in, gallery, backend, &d);
        const ConditionReport cond =
            check_demorph_conditions(in.o1, in.o2, in.i1, in.i2, cfg.theta, cfg.epsilon, backend);
        const Tensor<float>& t1 = d.straight ? in.i1 : in.i2;
        const Tensor<float>& t2 = d.straight ? in.i2 : in.i1;
        const auto [p1, s1] = image_metrics(in.o1, t1);
        const auto [p2, s2] = image_metrics(in.o2, t2);

        PerRecordRow row;
        row.morph_path = in.record.morph_path;
        row.paired_straight = d.straight;
        row.genuine1 = g[0];
        row.genuine2 = g[1];
        row.impostor1 = imp[0];
        row.impostor2 = imp[1];
        row.psnr_db = 0.5 * (p1 + p2);
        row.ssim_val = 0.5 * (s1 + s2);
        row.distinct_ok = cond.distinct_ok;
        row.match_ok = cond.match_ok;
        rep.per_record.push_back(row);

        rep.genuine_scores.insert(rep.genuine_scores.end(), g.begin(), g.end());
        rep.impostor_scores.insert(rep.impostor_scores.end(), imp.begin(), imp.end());
        psnr_sum += row.psnr_db;
        ssim_sum += row.ssim_val;
    }
    for (double level : cfg.fmr_levels) rep.tmr[level] = tmr_at_fmr(rep.genuine_scores, rep.impostor_scores, level);
    rep.ra = restoration_accuracy(rep.genuine_scores, cfg.ra_threshold);
    rep.psnr_mean = psnr_sum / static_cast<double>(results.size());
    rep.ssim_mean = ssim_sum / static_cast<double>(results.size());
    return rep;
}

// --- report serialization (fixed key order so regeneration is byte-identical)

inline ordered_json report_to_json(const EvaluationReport& r) {
    ordered_json j;
    j["matcher"] = r.matcher_name;
    j["config"] = {{"fmr_levels", r.config.fmr_levels},
                   {"ra_threshold", r.config.ra_threshold},
                   {"theta", r.config.theta},
                   {"epsilon", r.config.epsilon}};
    ordered_json tmr = ordered_json::array();
    for (const auto& [level, value] : r.tmr) tmr.push_back({{"fmr", level}, {"tmr", value}});
    j["tmr_at_fmr"] = tmr;
    j["restoration_accuracy"] = r.ra;
    j["psnr_mean"] = r.psnr_mean;
    j["ssim_mean"] = r.ssim_mean;
    j["genuine_scores"] = r.genuine_scores;
    j["impostor_scores"] = r.impostor_scores;
    ordered_json rows = ordered_json::array();
    for (const auto& row : r.per_record)
        rows.push_back({{"morph", row.morph_path},
                        {"pairing", row.paired_straight ? "straight" : "crossed"},
                        {"genuine1", row.genuine1},
                        {"genuine2", row.genuine2},
                        {"impostor1", row.impostor1},
                        {"impostor2", row.impostor2},
                        {"psnr", row.psnr_db},
                        {"ssim", row.ssim_val},
                        {"distinct_ok", row.distinct_ok},
                        {"match_ok", row.match_ok}});
    j["per_record"] = rows;
    return j;
}

inline EvaluationReport report_from_json(const ordered_json& j) {
    EvaluationReport r;
    r.matcher_name = j.at("matcher").get<std::string>();
    r.config.fmr_levels = j.at("config").at("fmr_levels").get<std::vector<double>>();
    r.config.ra_threshold = j.at("config").at("ra_threshold").get<double>();
    r.config.theta = j.at("config").at("theta").get<double>();
    r.config.epsilon = j.at("config").at("epsilon").get<double>();
    for (const auto& e : j.at("tmr_at_fmr")) r.tmr[e.at("fmr").get<double>()] = e.at("tmr").get<double>();
    r.ra = j.at("restoration_accuracy").get<double>();
    r.psnr_mean = j.at("psnr_mean").get<double>();
    r.ssim_mean = j.at("ssim_mean").get<double>();
    r.genuine_scores = j.at("genuine_scores").get<std::vector<double>>();
    r.impostor_scores = j.at("impostor_scores").get<std::vector<double>>();
    for (const auto& e : j.at("per_record")) {
        PerRecordRow row;
        row.morph_path = e.at("morph").get<std::string>();
        row.paired_straight = e.at("pairing").get<std::string>() == "straight";
        row.genuine1 = e.at("genuine1").get<double>();
        row.genuine2 = e.at("genuine2").get<double>();
        row.impostor1 = e.at("impostor1").get<double>();
        row.impostor2 = e.at("impostor2").get<double>();
        row.psnr_db = e.at("psnr").get<double>();
        row.ssim_val = e.at("ssim").get<double>();
        row.distinct_ok = e.at("distinct_ok").get<bool>();
        row.match_ok = e.at("match_ok").get<bool>();
        r.per_record.push_back(row);
    }
    return r;
}

inline bool report_equal(const EvaluationReport& a, const EvaluationReport& b) {
    return report_to_json(a) == report_to_json(b);
}

inline void write_score_csv(const EvaluationReport& r, std::ostream& out) {
    out << "pair_id,score,label\n";
    out.precision(17);
    for (size_t i = 0; i < r.genuine_scores.size(); ++i) out << i << ',' << r.genuine_scores[i] << ",genuine\n";
    for (size_t i = 0; i < r.impostor_scores.size(); ++i) out << i << ',' << r.impostor_scores[i] << ",impostor\n";
}

inline void write_per_record_csv(const EvaluationReport& r, std::ostream& out) {
    out << "morph,pairing,genuine1,genuine2,impostor1,impostor2,psnr,ssim,distinct_ok,match_ok\n";
    out.precision(17);
    for (const auto& row : r.per_record)
        out << row.morph_path << ',' << (row.paired_straight ? "straight" : "crossed") << ',' << row.genuine1 << ','
            << row.genuine2 << ',' << row.impostor1 << ',' << row.impostor2 << ',' << row.psnr_db << ','
            << row.ssim_val << ',' << (row.distinct_ok ? 1 : 0) << ',' << (row.match_ok ? 1 : 0) << '\n';
}

}  // namespace demorph
