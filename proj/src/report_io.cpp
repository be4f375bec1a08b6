#include "clickcfa/report_io.hpp"

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "clickcfa/errors.hpp"

namespace clickcfa::report {

namespace {
std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write " + path);
    return out;
}
} // namespace

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_metrics_csv(const std::string& path, const std::vector<cfa::EpochMetrics>& rows) {
    auto out = open_out(path);
    out << "epoch,loss,acc\n";
    for (const auto& r : rows) {
        out << r.epoch << ',' << fmt_g17(r.train_loss) << ',';
        if (r.val_acc >= 0.0) out << fmt_g17(r.val_acc);
        out << '\n';
    }
}

void write_meta_history_csv(const std::string& path, const std::vector<meta::MetaIterRow>& rows) {
    auto out = open_out(path);
    out << "iteration,cluster,train_loss,meta_loss,mean_weight,std_weight\n";
    for (const auto& r : rows) {
        out << r.iteration << ',' << r.cluster << ',' << fmt_g17(r.train_loss) << ','
            << fmt_g17(r.meta_loss) << ',' << fmt_g17(r.mean_weight) << ','
            << fmt_g17(r.std_weight) << '\n';
    }
}

void write_pretrain_csv(const std::string& path,
                        const std::vector<std::pair<std::size_t, double>>& rows) {
    auto out = open_out(path);
    out << "epoch,l_pre\n";
    for (const auto& [epoch, loss] : rows) out << epoch << ',' << fmt_g17(loss) << '\n';
}

void write_silhouette_csv(const std::string& path,
                          const std::vector<std::pair<int, double>>& curve) {
    auto out = open_out(path);
    out << "k,silhouette\n";
    for (const auto& [k, s] : curve) out << k << ',' << fmt_g17(s) << '\n';
}

void write_report_csv(const std::string& path, const std::vector<eval::GridRow>& rows) {
    auto out = open_out(path);
    out << "method,acc_mean,acc_std,f1_mean,f1_std,fingerprint,status\n";
    for (const auto& r : rows) {
        if (r.excluded) {
            out << r.name << ",,,,,," << "excluded-external-model\n";
            continue;
        }
        out << r.name << ',' << fmt_g17(r.report.acc_mean) << ',' << fmt_g17(r.report.acc_std)
            << ',' << fmt_g17(r.report.f1_mean) << ',' << fmt_g17(r.report.f1_std) << ','
            << r.report.fingerprint << ",ok\n";
    }
}

std::string report_table_text(const std::vector<eval::GridRow>& rows) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-18s %-17s %-17s\n", "method", "ACC", "F1");
    out << line;
    for (const auto& r : rows) {
        if (r.excluded) {
            std::snprintf(line, sizeof line, "%-18s %-17s %-17s\n", r.name.c_str(), "-", "-");
        } else {
            char acc[32], f1[32];
            std::snprintf(acc, sizeof acc, ".%04.0f +- .%04.0f", r.report.acc_mean * 10000,
                          r.report.acc_std * 10000);
            std::snprintf(f1, sizeof f1, ".%04.0f +- .%04.0f", r.report.f1_mean * 10000,
                          r.report.f1_std * 10000);
            std::snprintf(line, sizeof line, "%-18s %-17s %-17s\n", r.name.c_str(), acc, f1);
        }
        out << line;
    }
    return out.str();
}

void write_sweep_csv(const std::string& path, const std::vector<eval::SweepPoint>& points) {
    auto out = open_out(path);
    out << "fraction,mean_acc,meta_size\n";
    for (const auto& p : points)
        out << fmt_g17(p.fraction) << ',' << fmt_g17(p.mean_acc) << ',' << p.meta_size << '\n';
}

void write_gram_csv(const std::string& path, const std::vector<eval::GramDistribution>& dists) {
    auto out = open_out(path);
    out << "subset,gram,frequency\n";
    for (const auto& d : dists) {
        if (!d.present) {
            out << d.subset << ",,empty-subset\n";
            continue;
        }
        for (const auto& [gram, freq] : d.freqs)
            out << d.subset << ",\"" << gram << "\"," << fmt_g17(freq) << '\n';
    }
}

void write_fold_scores_csv(const std::string& path, const eval::EvalReport& report) {
    auto out = open_out(path);
    out << "fold,acc,f1,tp,fp,tn,fn,test_size,selected_k,fingerprint\n";
    for (std::size_t f = 0; f < report.folds.size(); ++f) {
        const auto& a = report.folds[f];
        out << f << ',' << fmt_g17(a.scores.acc) << ',' << fmt_g17(a.scores.f1) << ','
            << a.scores.tp << ',' << a.scores.fp << ',' << a.scores.tn << ',' << a.scores.fn
            << ',' << a.test_size << ',' << a.selected_k << ',' << report.fingerprint << '\n';
    }
}

std::string make_run_dir(const std::string& root, const std::string& subcommand,
                         const std::string& fingerprint) {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
    std::string dir = root + "/" + stamp + "-" + subcommand + "-" + fingerprint.substr(0, 8);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create run directory " + dir);
    return dir;
}

} // namespace clickcfa::report
