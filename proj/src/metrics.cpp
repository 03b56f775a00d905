#include "hdmi/metrics.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

namespace hdmi {

namespace {

std::atomic<std::uint64_t> g_selectivity_clamps{0};

void check_distribution(const Tensor& p, const char* what) {
    if (p.rank() != 1 || p.size() == 0) throw InputError(std::string(what) + ": not a vector");
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!std::isfinite(p[i]) || p[i] < -1e-9)
            throw InputError(std::string(what) + ": negative or non-finite probability");
        sum += p[i];
    }
    if (std::fabs(sum - 1.0) > 1e-6)
        throw InputError(std::string(what) + ": probabilities do not sum to 1");
}

}  // namespace

double tv_distance(const Tensor& p, const Tensor& q) {
    check_distribution(p, "tv_distance p");
    check_distribution(q, "tv_distance q");
    if (p.size() != q.size()) throw InputError("tv_distance: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - q[i]);
    return 0.5 * s;
}

double completeness(const Tensor& p_after, std::size_t counterfactual_class) {
    check_distribution(p_after, "completeness");
    if (counterfactual_class >= p_after.size())
        throw InputError("completeness: class index out of range");
    Tensor onehot = Tensor::zeros({p_after.size()});
    onehot[counterfactual_class] = 1.0;
    return 1.0 - tv_distance(p_after, onehot);
}

double max_tv_shift(const Tensor& p) {
    check_distribution(p, "max_tv_shift");
    if (p.size() < 2) throw DegenerateError("max_tv_shift: need at least 2 classes");
    double mn = p[0], mx = p[0];
    for (std::size_t i = 1; i < p.size(); ++i) {
        mn = std::min(mn, p[i]);
        mx = std::max(mx, p[i]);
    }
    return std::max(1.0 - mn, mx);
}

double selectivity(const Tensor& p_before, const Tensor& p_after) {
    const double shift = tv_distance(p_after, p_before);
    const double denom = max_tv_shift(p_before);
    double sel = 1.0 - shift / denom;
    if (sel < 0.0) {
        ++g_selectivity_clamps;
        sel = 0.0;
    } else if (sel > 1.0) {
        sel = 1.0;
    }
    return sel;
}

std::uint64_t selectivity_clamp_count() { return g_selectivity_clamps.load(); }
void reset_selectivity_clamp_count() { g_selectivity_clamps.store(0); }

double reliability(double comp, double sel) {
    if (!(comp >= 0.0 && comp <= 1.0) || !(sel >= 0.0 && sel <= 1.0))
        throw InputError("reliability: inputs must lie in [0,1]");
    const double denom = comp + sel;
    if (denom == 0.0) return 0.0;
    return 2.0 * comp * sel / denom;
}

std::string metrics_tsv_header() {
    return "task\tmethod\tcompleteness\tselectivity\treliability\tn_samples";
}

std::string metrics_tsv_row(const MetricsRecord& r) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(6);
    os << r.task << '\t' << r.method << '\t' << r.completeness << '\t' << r.selectivity << '\t'
       << r.reliability << '\t' << r.n_samples;
    return os.str();
}

}  // namespace hdmi
