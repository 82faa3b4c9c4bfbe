#include "deepalign/evalkit.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace deepalign {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

}  // namespace

int levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<int> prev(m + 1), curr(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= n; ++i) {
        curr[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= m; ++j) {
            int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, sub});
        }
        std::swap(prev, curr);
    }
    return prev[m];
}

int optimal_empty_moves(const std::vector<std::string>& log_seq,
                        const std::vector<std::string>& model_seq) {
    const std::size_t n = log_seq.size(), m = model_seq.size();
    std::vector<int> prev(m + 1), curr(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= n; ++i) {
        curr[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= m; ++j) {
            curr[j] = std::min(prev[j] + 1, curr[j - 1] + 1);
            if (log_seq[i - 1] == model_seq[j - 1]) curr[j] = std::min(curr[j], prev[j - 1]);
        }
        std::swap(prev, curr);
    }
    return prev[m];
}

namespace {

Alignment align_against(const std::vector<std::string>& log_seq,
                        const std::vector<std::string>& model_seq) {
    const std::size_t n = log_seq.size(), m = model_seq.size();
    std::vector<std::vector<int>> cost(n + 1, std::vector<int>(m + 1));
    for (std::size_t j = 0; j <= m; ++j) cost[0][j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= n; ++i) {
        cost[i][0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= m; ++j) {
            cost[i][j] = std::min(cost[i - 1][j] + 1, cost[i][j - 1] + 1);
            if (log_seq[i - 1] == model_seq[j - 1])
                cost[i][j] = std::min(cost[i][j], cost[i - 1][j - 1]);
        }
    }
    Alignment out;
    std::size_t i = n, j = m;
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 && log_seq[i - 1] == model_seq[j - 1] &&
            cost[i][j] == cost[i - 1][j - 1]) {
            out.push_back({log_seq[i - 1], model_seq[j - 1]});
            --i;
            --j;
        } else if (j > 0 && cost[i][j] == cost[i][j - 1] + 1) {
            out.push_back({std::nullopt, model_seq[j - 1]});
            --j;
        } else {
            out.push_back({log_seq[i - 1], std::nullopt});
            --i;
        }
    }
    std::reverse(out.begin(), out.end());
    return out;
}

}  // namespace

Alignment reference_align(const std::vector<std::string>& case_activities,
                          const std::vector<std::vector<std::string>>& variants) {
    if (variants.empty()) fail("reference_align: empty variant set");
    std::vector<std::vector<std::string>> sorted = variants;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    const std::vector<std::string>* best = nullptr;
    int best_cost = 0;
    for (const auto& v : sorted) {
        int cost = optimal_empty_moves(case_activities, v);
        if (!best || cost < best_cost) {
            best = &v;
            best_cost = cost;
        }
    }
    return align_against(case_activities, *best);
}

EvaluationReport evaluate(const std::vector<AlignmentRecord>& corrections,
                          const EventLog& ground_truth) {
    std::map<std::string, const Case*> truth_by_id;
    for (const auto& c : ground_truth.cases)
        if (!truth_by_id.emplace(c.id, &c).second) fail("duplicate id in ground truth: " + c.id);

    std::map<std::string, const AlignmentRecord*> corr_by_id;
    for (const auto& rec : corrections)
        if (!corr_by_id.emplace(rec.id, &rec).second) fail("duplicate id in corrections: " + rec.id);
    if (corr_by_id.size() != truth_by_id.size())
        fail("corrections and ground truth differ in case count");
    for (const auto& [id, _] : truth_by_id)
        if (!corr_by_id.count(id)) fail("missing correction for case " + id);

    EvaluationReport report;
    report.n_cases = corrections.size();
    int tp_anom = 0, fp_anom = 0, fn_anom = 0, tn_anom = 0;
    int n_correct = 0, n_optimal = 0;
    long lev_total = 0;
    int n_incorrect = 0;
    std::map<std::string, long> kind_lev;

    for (const auto& [id, truth] : truth_by_id) {
        const AlignmentRecord& rec = *corr_by_id.at(id);
        const std::string label = truth->label.empty() ? "normal" : truth->label;
        const bool truth_anomalous = label != "normal";
        const int empty_moves = empty_move_count(rec.alignment);
        const bool predicted_anomalous = empty_moves >= 1;

        auto& cell = report.confusion[label];
        (predicted_anomalous ? cell.second : cell.first) += 1;
        if (truth_anomalous && predicted_anomalous) ++tp_anom;
        if (!truth_anomalous && predicted_anomalous) ++fp_anom;
        if (truth_anomalous && !predicted_anomalous) ++fn_anom;
        if (!truth_anomalous && !predicted_anomalous) ++tn_anom;

        const std::vector<std::string> truth_acts = truth->activities();
        const bool correct = rec.corrected == truth_acts;
        KindStats& ks = report.per_kind[label];
        ++ks.count;
        if (predicted_anomalous) ++ks.detected;
        if (correct) {
            ++ks.corrected;
            ++n_correct;
            int optimal = optimal_empty_moves(log_projection(rec.alignment),
                                              model_projection(rec.alignment));
            if (empty_moves == optimal) ++n_optimal;
        } else {
            int err = levenshtein(rec.corrected, truth_acts);
            lev_total += err;
            kind_lev[label] += err;
            ++n_incorrect;
        }
    }

    auto f1 = [](int tp, int fp, int fn) {
        double denom = 2.0 * tp + fp + fn;
        return denom > 0.0 ? 2.0 * tp / denom : 0.0;
    };
    // normal is the positive class for F1_N, anomalous for F1_A
    report.f1_anomalous = f1(tp_anom, fp_anom, fn_anom);
    report.f1_normal = f1(tn_anom, fn_anom, fp_anom);
    report.f1_macro = 0.5 * (report.f1_normal + report.f1_anomalous);
    report.correction_accuracy =
        report.n_cases ? static_cast<double>(n_correct) / static_cast<double>(report.n_cases) : 0.0;
    report.has_incorrect = n_incorrect > 0;
    report.mean_levenshtein_incorrect =
        n_incorrect ? static_cast<double>(lev_total) / n_incorrect : 0.0;
    report.has_correct = n_correct > 0;
    report.optimality_rate = n_correct ? static_cast<double>(n_optimal) / n_correct : 0.0;
    for (auto& [label, ks] : report.per_kind) {
        int incorrect = ks.count - ks.corrected;
        ks.mean_error_incorrect =
            incorrect ? static_cast<double>(kind_lev[label]) / incorrect : 0.0;
    }
    return report;
}

std::string report_to_json(const EvaluationReport& report) {
    nlohmann::ordered_json j;
    j["n_cases"] = report.n_cases;
    j["f1_normal"] = report.f1_normal;
    j["f1_anomalous"] = report.f1_anomalous;
    j["f1_macro"] = report.f1_macro;
    j["correction_accuracy"] = report.correction_accuracy;
    j["mean_levenshtein_incorrect"] = report.mean_levenshtein_incorrect;
    j["has_incorrect"] = report.has_incorrect;
    j["optimality_rate"] = report.optimality_rate;
    j["has_correct"] = report.has_correct;
    j["confusion"] = nlohmann::ordered_json::object();
    for (const auto& [label, cell] : report.confusion)
        j["confusion"][label] = {{"predicted_normal", cell.first},
                                 {"predicted_anomalous", cell.second}};
    j["per_kind"] = nlohmann::ordered_json::object();
    for (const auto& [label, ks] : report.per_kind)
        j["per_kind"][label] = {{"count", ks.count},
                                {"detected", ks.detected},
                                {"corrected", ks.corrected},
                                {"mean_error_incorrect", ks.mean_error_incorrect}};
    if (!report.config_echo.empty())
        j["config"] = nlohmann::json::parse(report.config_echo);
    return j.dump(2);
}

EvaluationReport report_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    EvaluationReport r;
    r.n_cases = j.at("n_cases").get<std::size_t>();
    r.f1_normal = j.at("f1_normal").get<double>();
    r.f1_anomalous = j.at("f1_anomalous").get<double>();
    r.f1_macro = j.at("f1_macro").get<double>();
    r.correction_accuracy = j.at("correction_accuracy").get<double>();
    r.mean_levenshtein_incorrect = j.at("mean_levenshtein_incorrect").get<double>();
    r.has_incorrect = j.at("has_incorrect").get<bool>();
    r.optimality_rate = j.at("optimality_rate").get<double>();
    r.has_correct = j.at("has_correct").get<bool>();
    for (const auto& [label, cell] : j.at("confusion").items())
        r.confusion[label] = {cell.at("predicted_normal").get<int>(),
                              cell.at("predicted_anomalous").get<int>()};
    for (const auto& [label, ks] : j.at("per_kind").items()) {
        KindStats s;
        s.count = ks.at("count").get<int>();
        s.detected = ks.at("detected").get<int>();
        s.corrected = ks.at("corrected").get<int>();
        s.mean_error_incorrect = ks.at("mean_error_incorrect").get<double>();
        r.per_kind[label] = s;
    }
    if (j.contains("config")) r.config_echo = j.at("config").dump();
    return r;
}

std::string report_table(const EvaluationReport& report, const std::string& row_label) {
    std::ostringstream out;
    out << std::left << std::setw(22) << "" << std::right << std::setw(8) << "F1_N"
        << std::setw(8) << "F1_A" << std::setw(8) << "F1" << std::setw(8) << "Error"
        << std::setw(9) << "Optimal" << "\n";
    out << std::left << std::setw(22) << row_label << std::right << std::fixed
        << std::setprecision(4) << std::setw(8) << report.f1_normal << std::setw(8)
        << report.f1_anomalous << std::setw(8) << report.f1_macro << std::setprecision(2)
        << std::setw(8) << report.mean_levenshtein_incorrect << std::setprecision(1)
        << std::setw(8) << 100.0 * report.optimality_rate << "%\n";
    return out.str();
}

}  // namespace deepalign
