#pragma once

#include <string>
#include <vector>

#include "clickcfa/eval.hpp"

namespace clickcfa::report {

std::string fmt_g17(double v);

void write_metrics_csv(const std::string& path, const std::vector<cfa::EpochMetrics>& rows);
void write_meta_history_csv(const std::string& path, const std::vector<meta::MetaIterRow>& rows);
void write_pretrain_csv(const std::string& path,
                        const std::vector<std::pair<std::size_t, double>>& rows);
void write_silhouette_csv(const std::string& path,
                          const std::vector<std::pair<int, double>>& curve);
void write_report_csv(const std::string& path, const std::vector<eval::GridRow>& rows);
std::string report_table_text(const std::vector<eval::GridRow>& rows); // aligned text
void write_sweep_csv(const std::string& path, const std::vector<eval::SweepPoint>& points);
void write_gram_csv(const std::string& path, const std::vector<eval::GramDistribution>& dists);
void write_fold_scores_csv(const std::string& path, const eval::EvalReport& report);

// <root>/<UTC timestamp>-<subcommand>-<fingerprint8>; creates directories.
std::string make_run_dir(const std::string& root, const std::string& subcommand,
                         const std::string& fingerprint);

} // namespace clickcfa::report
