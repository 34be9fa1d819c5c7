#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "brackets.hpp"
#include "cqm/estimator.hpp"
#include "cqm/exact.hpp"
#include "cqm/mapping.hpp"
#include "fock.hpp"
#include "oracles.hpp"

using namespace cqm;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        detail << (ok ? "" : "[x] ") << what << "; ";
    }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Symmetric leads, Γ = 1.
ModelConfig base_model(double eps, double u, double temp, double mu_l, double mu_r) {
    ModelConfig m;
    m.eps_up = m.eps_down = eps;
    m.hubbard_u = u;
    m.temp_left = m.temp_right = temp;
    m.mu_left = mu_l;
    m.mu_right = mu_r;
    return m;
}

EnsembleSpec ensemble(const ModelConfig& m, double t_max, double dt, std::uint64_t n_traj, std::uint64_t seed) {
    EnsembleSpec s;
    s.model = m;
    s.integrator.t_max = t_max;
    s.integrator.output_grid = IntegratorConfig::uniform_grid(t_max, dt);
    s.n_traj = n_traj;
    s.seeds.master_seed = seed;
    return s;
}

HubbardQuantization step(double delta) {
    HubbardQuantization q;
    q.delta_up = q.delta_down = delta;
    q.mode = GateMode::step;
    return q;
}

double window_mean(std::span<const double> times, std::span<const double> v, SteadyWindow w) {
    double s = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (w.contains(times[i])) {
            s += v[i];
            ++n;
        }
    return s / n;
}

// ---------------------------------------------------------------------------

Outcome criterion_1() {
    Outcome o;
    const testing::BracketReport r = testing::bracket_correspondence(100, 2024);
    o.check(r.max_error <= 1e-12, "max |{A,B} - image(i[B,A])| = " + fmt("%.2e", r.max_error) + " over " +
                                      std::to_string(r.pairs_checked) + " pairs (tol 1e-12)");
    o.check(r.max_decomposition_residual <= 1e-12,
            "commutator decomposition residual " + fmt("%.2e", r.max_decomposition_residual));
    return o;
}

// Noninteracting transport setting: ε = −1, T = 0.2, μ = ±6, U = 0, N_ℓ = 200.
constexpr std::uint64_t kFreeTraj = 20000;
const SteadyWindow kFreeWindow{5.0, 10.0};

EnsembleSpec free_spec(std::vector<Observable> obs) {
    EnsembleSpec s = ensemble(base_model(-1.0, 0.0, 0.2, 6.0, -6.0), 10.0, 0.5, kFreeTraj, 2);
    s.quant.mode = GateMode::off;
    s.observables = std::move(obs);
    return s;
}

double max_z(const TimeSeriesEstimate& e, std::span<const double> exact) {
    double worst = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double d = std::abs(e.mean(i) - exact[i]);
        const double se = e.stderr_of_mean(i);
        worst = std::max(worst, se > 0 ? d / se : (d < 1e-12 ? 0.0 : HUGE_VAL));
    }
    return worst;
}

Outcome criterion_2() {
    Outcome o;
    const EnsembleSpec s = free_spec({Observable::current_left_up});
    const EnsembleResult r = run_ensemble(s);
    const ExactSeries ex = exact_series(s.model, build_leads(s.model), s.integrator.output_grid);
    const double z = max_z(r.series[0], ex.current_left_up);
    o.check(z <= 3.0, "<I_L,up>(t) vs exact, max |z| = " + fmt("%.2f", z) + " over " +
                          std::to_string(r.series[0].size()) + " points (tol 3)");
    return o;
}

Outcome criterion_3() {
    Outcome o;
    const EnsembleSpec s = free_spec({Observable::current_left_squared_up, Observable::current_left_squared_up_term1,
                                      Observable::current_left_squared_up_term2,
                                      Observable::current_left_squared_up_term3});
    const EnsembleResult r = run_ensemble(s);
    const ExactSeries ex = exact_series(s.model, build_leads(s.model), s.integrator.output_grid);
    const double z = max_z(r.series[0], ex.current_left_squared_up);
    o.check(z <= 3.0, "<I_L,up^2>(t) vs Wick, max |z| = " + fmt("%.2f", z) + " (tol 3)");
    const double oracle = window_mean(ex.times, ex.current_left_squared_up, kFreeWindow);
    for (int k = 1; k <= 3; ++k) {
        const ScalarEstimate term = steady_state_average(r.series[static_cast<std::size_t>(k)], kFreeWindow);
        const double zt = std::abs(term.mean - oracle) / term.stderr_of_mean;
        o.check(zt > 3.0, "term" + std::to_string(k) + " steady " + fmt("%.4f", term.mean) + " vs " +
                              fmt("%.4f", oracle) + ", |z| = " + fmt("%.1f", zt) + " (needs > 3)");
    }
    return o;
}

Outcome criterion_4() {
    Outcome o;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double err_pop = 0, err_cur = 0, err_cur2 = 0, err_corr = 0;
    int instances = 0;
    const testing::FockSpace fs3(3);
    for (int trial = 0; trial < 25; ++trial) {
        ModelConfig c = base_model(4 * u(rng) - 2, 0.0, 0.2 + 3 * u(rng), 2 * u(rng) - 1, 2 * u(rng) - 1);
        c.temp_right = 0.2 + 3 * u(rng);
        c.dot_init_up = trial % 2;
        const double t_l = 0.1 + u(rng), t_r = 0.1 + u(rng);
        const double e_l = 4 * u(rng) - 2, e_r = 4 * u(rng) - 2;
        const LeadDiscretization leads = testing::single_mode_leads(e_l, t_l, e_r, t_r);
        const Eigen::MatrixXcd h = single_particle_matrix(c, leads, Spin::up).matrix;
        const Eigen::MatrixXcd rho0 = fs3.product_state(
            {double(c.dot_init_up), fermi(e_l, c.mu_left, c.temp_left), fermi(e_r, c.mu_right, c.temp_right)});
        const Eigen::MatrixXcd current = std::complex<double>(0.0, -t_l) *
                                         (fs3.create(0) * fs3.annihilate(1) - fs3.create(1) * fs3.annihilate(0));
        const CorrelationPropagator p(h);
        const CorrelationMatrix c0 = initial_correlations(c, leads, Spin::up);
        for (double t : {0.0, 0.5, 2.0, 7.0, 25.0}) {
            const Eigen::MatrixXcd rho = testing::evolve(fs3.one_body(h), rho0, t);
            const CorrelationMatrix ct = p.propagate(c0, t);
            err_pop = std::max(err_pop, std::abs(exact_population(ct) -
                                                 testing::expectation(rho, fs3.create(0) * fs3.annihilate(0)).real()));
            err_cur = std::max(err_cur, std::abs(exact_current(ct, leads, Spin::up) -
                                                 testing::expectation(rho, current).real()));
            err_cur2 = std::max(err_cur2, std::abs(exact_current_squared(ct, leads, Spin::up) -
                                                   testing::expectation(rho, current * current).real()));
            err_corr = std::max(err_corr, (ct.c - testing::correlations(fs3, rho)).cwiseAbs().maxCoeff());
        }
        ++instances;
    }
    // Generic Hermitian one-body problems on 2 and 4 levels.
    std::normal_distribution<double> g;
    for (int levels : {2, 4}) {
        const testing::FockSpace fs(levels);
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::MatrixXcd h(levels, levels);
            for (int i = 0; i < levels; ++i)
                for (int j = 0; j < levels; ++j) h(i, j) = {g(rng), g(rng)};
            h = 0.5 * (h + h.adjoint()).eval();
            std::vector<double> occ(static_cast<std::size_t>(levels));
            for (double& x : occ) x = u(rng);
            const Eigen::MatrixXcd rho0 = fs.product_state(occ);
            const CorrelationMatrix c0{testing::correlations(fs, rho0)};
            for (double t : {0.3, 3.0, 30.0}) {
                const Eigen::MatrixXcd rho = testing::evolve(fs.one_body(h), rho0, t);
                const CorrelationMatrix ct = propagate_correlations(h, c0, t);
                err_corr = std::max(err_corr, (ct.c - testing::correlations(fs, rho)).cwiseAbs().maxCoeff());
                err_pop = std::max(err_pop, std::abs(exact_population(ct) -
                                                     testing::expectation(rho, fs.create(0) * fs.annihilate(0)).real()));
            }
            ++instances;
        }
    }
    const double tol = 1e-10;
    o.check(err_pop <= tol, "population " + fmt("%.1e", err_pop));
    o.check(err_cur <= tol, "current " + fmt("%.1e", err_cur));
    o.check(err_cur2 <= tol, "current^2 " + fmt("%.1e", err_cur2));
    o.check(err_corr <= tol, "correlation matrix " + fmt("%.1e", err_corr) + " over " + std::to_string(instances) +
                                 " instances (tol 1e-10)");
    return o;
}

CalibrationSpec calibration_at(double temp, double u, std::uint64_t n_traj, MedianSource source) {
    CalibrationSpec c;
    c.base = ensemble(base_model(-0.5 * u, u, temp, 0.0, 0.0), 15.0, 0.5, n_traj, 5);
    c.window = {7.5, 15.0};
    c.initial_delta = 0.34;
    c.tolerance = 0.01;
    c.max_iterations = 10;
    c.source = source;
    return c;
}

std::string trace_text(const CalibrationResult& r) {
    std::string s = "trace";
    for (const CalibrationStep& st : r.trace) s += " " + fmt("%.3f", st.delta);
    return s + " -> " + fmt("%.3f", r.delta);
}

Outcome criterion_5() {
    Outcome o;
    const CalibrationResult low = calibrate_delta(calibration_at(0.01, 10.0, 1000, MedianSource::pooled_samples));
    o.check(low.trace.size() >= 2 && std::abs(low.trace[1].delta - 0.24) <= 0.03,
            "T=0.01 U=10 " + trace_text(low) + "; second iterate ~0.24 (tol 0.03)");
    o.check(low.converged && low.trace.size() <= 5, "converged in " + std::to_string(low.trace.size()) + " <= 5");
    o.check(std::abs(low.delta - 0.18) <= 0.03, "delta 0.18 +- 0.03");
    const ScalarEstimate& n = low.trace.back().occupation;
    o.check(std::abs(n.mean - 0.5) <= 3 * n.stderr_of_mean,
            "<n_sigma> = " + fmt("%.4f", n.mean) + " +- " + fmt("%.4f", n.stderr_of_mean) + " vs 1/2");

    const CalibrationResult low_avg =
        calibrate_delta(calibration_at(0.01, 10.0, 1000, MedianSource::trajectory_averages));
    o.check(low_avg.converged && std::abs(low_avg.delta - 0.18) <= 0.03,
            "trajectory-average median " + trace_text(low_avg) + " (0.18 +- 0.03)");

    const CalibrationResult u6 = calibrate_delta(calibration_at(1.0, 6.0, 1000, MedianSource::pooled_samples));
    o.check(u6.converged && std::abs(u6.delta - 0.24) <= 0.04, "T=1 U=6 " + trace_text(u6) + " (0.24 +- 0.04)");
    const CalibrationResult u1 = calibrate_delta(calibration_at(1.0, 1.0, 1000, MedianSource::pooled_samples));
    o.check(u1.converged && std::abs(u1.delta - 0.31) <= 0.04, "T=1 U=1 " + trace_text(u1) + " (0.31 +- 0.04)");
    return o;
}

// Bias staircase: ε = 10, U = 40, T = 4, μ = ±V/2. All energies are shifted by −30 so
// that levels and both chemical potentials fit a band of half-width 35.
ModelConfig shifted_bias_model(double mu_centre, double eps) {
    ModelConfig m = base_model(eps, 40.0, 4.0, mu_centre, mu_centre);
    m.band_b = 70.0;
    m.eps_max = 35.0;
    m.n_modes_per_lead = 280;
    return m;
}

struct Plateau {
    bool found = false;
    double v0 = 0, v1 = 0, level = 0, slope = 0;
};

// Flat windows (least-squares slope below 10% of the steepest rise) at an
// intermediate current level, at least 10 wide, not touching the last point.
std::vector<Plateau> plateaus(const std::vector<double>& v, const std::vector<double>& i, double saturation) {
    double rise = 0.0;
    for (std::size_t k = 0; k + 1 < v.size(); ++k) rise = std::max(rise, (i[k + 1] - i[k]) / (v[k + 1] - v[k]));
    std::vector<Plateau> out;
    for (std::size_t a = 0; a < v.size(); ++a) {
        for (std::size_t b = a + 1; b + 1 < v.size(); ++b) {
            if (v[b] - v[a] < 10.0 - 1e-9) continue;
            double sv = 0, si = 0, n = 0;
            for (std::size_t k = a; k <= b; ++k) {
                sv += v[k];
                si += i[k];
                ++n;
            }
            const double mv = sv / n, mi = si / n;
            double num = 0, den = 0;
            for (std::size_t k = a; k <= b; ++k) {
                num += (v[k] - mv) * (i[k] - mi);
                den += (v[k] - mv) * (v[k] - mv);
            }
            const double slope = num / den;
            if (std::abs(slope) < 0.1 * rise && mi > 0.2 * saturation && mi < 0.8 * saturation)
                out.push_back({true, v[a], v[b], mi, slope});
        }
    }
    return out;
}

Outcome criterion_6() {
    Outcome o;
    // Δ from a calibration at the particle-hole point of the same model.
    CalibrationSpec cal;
    cal.base = ensemble(shifted_bias_model(0.0, -20.0), 10.0, 0.5, 500, 6);
    cal.base.integrator.rel_tol = 1e-5;
    cal.window = {5.0, 10.0};
    const CalibrationResult c = calibrate_delta(cal);
    o.check(c.converged, "calibration " + trace_text(c) + " (expected ≈ 0.32)");

    const std::vector<double> grid{0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 120, 140};
    SweepSpec s;
    s.base = ensemble(shifted_bias_model(-30.0, -20.0), 10.0, 0.5, 5000, 7);
    s.base.integrator.rel_tol = 1e-5;
    s.axis = SweepAxis::bias;
    s.grid = grid;
    s.observable = Observable::current_left;
    s.window = {5.0, 10.0};

    for (GateMode mode : {GateMode::step, GateMode::continuous}) {
        s.base.quant = step(c.delta);
        s.base.quant.mode = mode;
        const SweepCurve curve = sweep(s);
        std::vector<double> v, i, e;
        for (const SweepPoint& p : curve.points) {
            if (!p.value) {
                o.check(false, "point V=" + fmt("%.0f", p.x) + " failed: " + p.error);
                return o;
            }
            v.push_back(p.x);
            i.push_back(p.value->mean);
            e.push_back(p.value->stderr_of_mean);
        }
        const char* tag = mode == GateMode::step ? "step" : "continuous";
        std::string curve_text = std::string(tag) + " I(V):";
        for (std::size_t k = 0; k < v.size(); ++k) curve_text += " " + fmt("%.3f", i[k]);
        o.detail << curve_text << "; ";

        if (mode == GateMode::step) {
            bool monotone = true;
            for (std::size_t a = 0; a < v.size(); ++a)
                for (std::size_t b = a + 1; b < v.size(); ++b)
                    monotone = monotone && i[b] - i[a] >= -3.0 * std::hypot(e[a], e[b]);
            o.check(monotone, "monotone non-decreasing within 3 stderr");
        }
        const double saturation = 0.5 * (i[i.size() - 1] + i[i.size() - 2]);
        const std::vector<Plateau> flat = plateaus(v, i, saturation);
        if (mode == GateMode::step) {
            const Plateau* best = nullptr;
            for (const Plateau& p : flat)
                if (!best || std::abs(p.level - 0.5 * saturation) < std::abs(best->level - 0.5 * saturation)) best = &p;
            const bool half = best && std::abs(best->level - 0.5 * saturation) <= 0.15 * 0.5 * saturation;
            o.check(half, best ? "plateau [" + fmt("%.0f", best->v0) + "," + fmt("%.0f", best->v1) + "] at " +
                                     fmt("%.3f", best->level / saturation) + " x saturation " +
                                     fmt("%.3f", saturation) + " (needs 0.5 +- 15%)"
                               : std::string("no intermediate plateau"));
        } else {
            o.check(flat.empty(), std::to_string(flat.size()) + " intermediate plateau windows in continuous mode");
        }
    }
    return o;
}

Outcome criterion_7() {
    Outcome o;
    ModelConfig m = base_model(0.0, 10.0, 0.01, 0.0, 0.0);
    m.band_b = 40.0;
    m.eps_max = 20.0;
    m.n_modes_per_lead = 240;
    SweepSpec s;
    s.base = ensemble(m, 12.0, 0.5, 500, 8);
    s.base.quant = step(0.18);
    s.base.integrator.rel_tol = 1e-5;
    s.axis = SweepAxis::gate;
    for (int k = -15; k <= 5; ++k) s.grid.push_back(k);
    s.observable = Observable::population;
    s.window = {6.0, 12.0};
    const SweepCurve curve = sweep(s);
    std::vector<double> eps, n;
    std::string text = "n(eps=-15..5):";
    for (const SweepPoint& p : curve.points) {
        if (!p.value) {
            o.check(false, "point eps=" + fmt("%.0f", p.x) + " failed: " + p.error);
            return o;
        }
        eps.push_back(p.x);
        n.push_back(p.value->mean);
        text += " " + fmt("%.2f", p.value->mean);
    }
    o.detail << text << "; ";
    auto at = [&](double x) { return n[static_cast<std::size_t>(std::lround(x + 15))]; };
    o.check(std::abs(at(5) - 0.0) <= 0.15, "plateau 0 at eps=5: " + fmt("%.3f", at(5)));
    o.check(std::abs(at(-5) - 1.0) <= 0.1, "n=1 +- 0.1 at eps=-U/2: " + fmt("%.3f", at(-5)));
    o.check(std::abs(at(-15) - 2.0) <= 0.15, "plateau 2 at eps=-15: " + fmt("%.3f", at(-15)));
    auto crossing = [&](double level) {
        for (std::size_t k = n.size() - 1; k > 0; --k)
            if ((n[k] - level) * (n[k - 1] - level) <= 0.0 && n[k] != n[k - 1])
                return eps[k] + (level - n[k]) * (eps[k - 1] - eps[k]) / (n[k - 1] - n[k]);
        return std::nan("");
    };
    const double c1 = crossing(0.5), c2 = crossing(1.5);
    o.check(std::abs(c1 - 0.0) <= 1.0, "0->1 transition at eps=" + fmt("%.2f", c1) + " (0 +- 1)");
    o.check(std::abs(c2 + 10.0) <= 1.0, "1->2 transition at eps=" + fmt("%.2f", c2) + " (-10 +- 1)");
    return o;
}

Outcome criterion_8() {
    Outcome o;
    for (auto [u, delta] : {std::pair{6.0, 0.24}, std::pair{1.0, 0.31}}) {
        EnsembleSpec s = ensemble(base_model(-0.5 * u, u, 1.0, 0.5, -0.5), 10.0, 0.25, 2000, 9);
        s.quant = step(delta);
        s.observables = {Observable::population};
        const TimeSeriesEstimate n = run_ensemble(s).series[0];
        bool monotone = true;
        double worst = 0.0;
        for (std::size_t a = 0; a < n.size(); ++a)
            for (std::size_t b = a + 1; b < n.size(); ++b) {
                const double z = (n.mean(a) - n.mean(b)) / std::hypot(n.stderr_of_mean(a), n.stderr_of_mean(b));
                worst = std::max(worst, z);
                monotone = monotone && z <= 3.0;
            }
        const std::string tag = "U=" + fmt("%.0f", u) + ": ";
        o.check(n.mean(0) == 0.0, tag + "n(0) = 0");
        o.check(monotone, tag + "largest drop " + fmt("%.2f", worst) + " stderr (tol 3)");
        const ScalarEstimate ss = steady_state_average(n, {7.5, 10.0});
        o.check(ss.mean >= 0.9 && ss.mean <= 1.1, tag + "steady n = " + fmt("%.3f", ss.mean) + " in [0.9,1.1]");
    }
    return o;
}

struct VarianceStudy {
    ControlVariateEstimate cv;
    TimeSeriesEstimate plain;
    double steady_ratio = 0.0;
};

VarianceStudy variance_study(double u, double delta, std::uint64_t n_traj) {
    PairedSpec p;
    p.target = ensemble(base_model(2.0, u, 0.5, 2.0, -2.0), 10.0, 0.5, n_traj, 10);
    p.target.quant = step(delta);
    p.target.observables = {Observable::current_left_up};
    p.reference_model = p.target.model;
    p.reference_model.hubbard_u = 0.0;
    p.reference_quant = p.target.quant;
    p.reference_quant.mode = GateMode::off;
    const PairedResult r = run_paired_ensemble(p);
    const ExactSeries ex = exact_series(p.reference_model, build_leads(p.reference_model), r.target[0].times);
    VarianceStudy out{control_variate(r.target[0], r.reference[0], r.difference[0], ex.current_left_up),
                      r.target[0], 0.0};
    double var_d = 0.0, var_a = 0.0;
    for (std::size_t i = 0; i < r.target[0].size(); ++i) {
        if (!kFreeWindow.contains(r.target[0].times[i])) continue;
        var_d += r.difference[0].variance(i);
        var_a += r.target[0].variance(i);
    }
    out.steady_ratio = var_d / var_a;
    return out;
}

Outcome criterion_9() {
    Outcome o;
    for (auto [u, delta] : {std::pair{0.5, 0.31}, std::pair{6.0, 0.24}}) {
        const VarianceStudy v = variance_study(u, delta, 5000);
        const std::string tag = "U=" + fmt("%.1f", u) + ": ";
        if (u < 1.0)
            o.check(v.steady_ratio < 0.5, tag + "steady ratio " + fmt("%.3f", v.steady_ratio) + " < 1/2");
        else
            o.check(v.steady_ratio > 0.5, tag + "steady ratio " + fmt("%.3f", v.steady_ratio) + " > 1/2");
        o.check(v.cv.variance_ratio[0].has_value() && *v.cv.variance_ratio[0] == 0.0, tag + "ratio(t=0) = 0");
        double worst = 0.0;
        for (std::size_t i = 0; i < v.cv.times.size(); ++i)
            worst = std::max(worst, std::abs(v.cv.mean[i] - v.plain.mean(i)) /
                                        std::hypot(v.plain.stderr_of_mean(i), v.cv.stderr_of_mean[i]));
        o.check(worst <= 3.0, tag + "combined vs plain max |z| " + fmt("%.2f", worst));
    }
    return o;
}

Outcome criterion_10() {
    Outcome o;
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-13;
    cfg.abs_tol = 1e-15;
    cfg.t_max = 20.0;
    cfg.output_grid = IntegratorConfig::uniform_grid(20.0, 0.5);

    const ModelConfig interacting = base_model(-3.0, 6.0, 1.0, 0.5, -0.5);
    const LeadDiscretization leads = build_leads(interacting);
    const EquationsOfMotion eom_u(interacting, leads, step(0.24));
    ModelConfig free = interacting;
    free.hubbard_u = 0.0;
    const LeadDiscretization free_leads = build_leads(free);
    const EquationsOfMotion eom_0(free, free_leads, HubbardQuantization{0.5, 0.5, GateMode::off});

    double max_n = 0.0, max_e = 0.0;
    const int n_traj = 10;
    for (int k = 0; k < n_traj; ++k) {
        const PhaseState s0 = sample_initial_state(SeedPlan{11}, static_cast<std::uint64_t>(k), leads, interacting);
        const double n0 = testing::spin_total(s0, leads, Spin::up) + testing::spin_total(s0, leads, Spin::down);
        integrate(s0, eom_u, cfg, [&](std::size_t, const PhaseState& s) {
            const double n = testing::spin_total(s, leads, Spin::up) + testing::spin_total(s, leads, Spin::down);
            max_n = std::max(max_n, std::abs(n - n0));
        });
        const PhaseState f0 = sample_initial_state(SeedPlan{12}, static_cast<std::uint64_t>(k), free_leads, free);
        const double e0 = testing::classical_energy(f0, free, free_leads);
        integrate(f0, eom_0, cfg, [&](std::size_t, const PhaseState& s) {
            max_e = std::max(max_e, std::abs(testing::classical_energy(s, free, free_leads) - e0));
        });
    }
    o.check(max_n <= 1e-8, "step U=6 total occupation drift " + fmt("%.1e", max_n) + " over t<=20, " +
                               std::to_string(n_traj) + " trajectories (tol 1e-8)");
    o.check(max_e <= 1e-8, "U=0 classical energy drift " + fmt("%.1e", max_e) + " (tol 1e-8)");
    return o;
}

Outcome criterion_11() {
    Outcome o;
    // Replicate ensembles of size N and 2N; the spread of their means must
    // shrink by a factor 2 in variance, up to the sampling distribution of
    // the ratio of two sample variances (log-normal approximation, 99%).
    const int replicates = 200;
    const std::uint64_t n = 40;
    EnsembleSpec s = ensemble(base_model(-3.0, 6.0, 1.0, 0.5, -0.5), 3.0, 1.5, n, 13);
    s.model.n_modes_per_lead = 100;
    s.quant = step(0.24);
    double var_of_mean[2];
    std::uint64_t next = 0;
    for (int half = 0; half < 2; ++half) {
        RunningMoments means;
        s.n_traj = n << half;
        for (int r = 0; r < replicates; ++r) {
            s.first_trajectory = next;
            next += s.n_traj;
            means.add(run_ensemble(s).series[0].moments.back().mean);
        }
        var_of_mean[half] = means.variance();
    }
    const double ratio = var_of_mean[1] / var_of_mean[0];
    const double sigma = std::sqrt(4.0 / (replicates - 1));
    const double lo = 0.5 * std::exp(-2.576 * sigma), hi = 0.5 * std::exp(2.576 * sigma);
    o.check(ratio >= lo && ratio <= hi, "Var(mean_2N)/Var(mean_N) = " + fmt("%.3f", ratio) + " in [" +
                                            fmt("%.3f", lo) + "," + fmt("%.3f", hi) + "]");

    const VarianceStudy v = variance_study(0.1, 0.31, 2000);
    o.check(v.steady_ratio < 1e-2, "U=0.1 steady variance ratio " + fmt("%.2e", v.steady_ratio) + " < 1e-2");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria of the quasiclassical simulator"};
    std::vector<int> selected;
    app.add_option("--criterion", selected, "Criterion number(s); all when omitted")->check(CLI::Range(1, 11));
    CLI11_PARSE(app, argc, argv);
    if (selected.empty())
        for (int k = 1; k <= 11; ++k) selected.push_back(k);

    const std::function<Outcome()> criteria[] = {criterion_1, criterion_2, criterion_3,  criterion_4,
                                                 criterion_5, criterion_6, criterion_7,  criterion_8,
                                                 criterion_9, criterion_10, criterion_11};
    bool all = true;
    for (int k : selected) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome r;
        try {
            r = criteria[k - 1]();
        } catch (const std::exception& e) {
            r.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %d: %s  (%.0f s) %s\n", k, r.pass ? "PASS" : "FAIL", secs, r.detail.str().c_str());
        std::fflush(stdout);
        all = all && r.pass;
    }
    return all ? 0 : 1;
}
