// SPDX-License-Identifier: Apache-2.0

#include "pixrect/rectifier.hpp"

#include "pixrect/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace pixrect {

namespace {
constexpr double kMaxExponent = 80.0; // Shockley exponential continues linearly beyond this
}

void DiodeParams::validate() const
{
    for (double v : {I_s, n, R_s, C_j0, V_j, m, temperature}) {
        if (!(v > 0.0))
            throw ConfigError("diode parameters must be strictly positive");
    }
    if (n < 1.0 || n > 2.0)
        throw ConfigError("diode ideality factor must lie in [1, 2]");
    if (!(m < 1.0))
        throw ConfigError("diode grading coefficient must lie in (0, 1)");
    if (!(fc > 0.0 && fc < 1.0))
        throw ConfigError("diode fc must lie in (0, 1)");
}

double DiodeParams::current(double v) const
{
    const double x = v / (n * thermal_voltage());
    if (x <= kMaxExponent)
        return I_s * std::expm1(x);
    return I_s * (std::exp(kMaxExponent) * (1.0 + x - kMaxExponent) - 1.0);
}

double DiodeParams::conductance(double v) const
{
    const double nvt = n * thermal_voltage();
    const double x = std::min(v / nvt, kMaxExponent);
    return I_s * std::exp(x) / nvt;
}

double DiodeParams::capacitance(double v) const
{
    const double vb = fc * V_j;
    if (v < vb)
        return C_j0 * std::pow(1.0 - v / V_j, -m);
    const double f2 = std::pow(1.0 - fc, 1.0 + m);
    return C_j0 / f2 * (1.0 - fc * (1.0 + m) + m * v / V_j);
}

double DiodeParams::capacitance_slope(double v) const
{
    const double vb = fc * V_j;
    if (v < vb)
        return C_j0 * m / V_j * std::pow(1.0 - v / V_j, -m - 1.0);
    return C_j0 / std::pow(1.0 - fc, 1.0 + m) * m / V_j;
}

void RectifierSpec::validate() const
{
    diode.validate();
    for (double v : {C_in, C_out, L_p, C_p, R_load}) {
        if (!(v > 0.0))
            throw ConfigError("rectifier capacitors, inductors and load must be strictly positive");
    }
}

RectifierSpec sms7621_like() { return RectifierSpec{}; }

double SteadyState::energy_imbalance() const
{
    if (!(p_delivered > 0.0))
        return 0.0;
    return (p_delivered - (p_load + p_junction + p_series)) / p_delivered;
}

namespace {

constexpr int kDim = 7;
using Vec = Eigen::Matrix<double, kDim, 1>;
using Mat = Eigen::Matrix<double, kDim, kDim>;

enum Idx { kSrc = 0, kVin, kILp, kVCin, kVj1, kVj2, kVout };

enum class SourceKind { Resistive, Inductive, Capacitive };

// Circuit right-hand side dx/dt = f(t, x) with its Jacobian.
class Circuit {
public:
    Circuit(const RectifierSpec& spec, double f, double v_peak, cplx z_src, double phase)
        : spec_(spec), omega_(2.0 * kPi * f), v_peak_(v_peak), phase_(phase), r_src_(z_src.real())
    {
        const double x = z_src.imag();
        if (std::abs(x) <= 1e-12 * std::max(1.0, std::abs(z_src))) {
            kind_ = SourceKind::Resistive;
        } else if (x > 0.0) {
            kind_ = SourceKind::Inductive;
            l_src_ = x / omega_;
        } else {
            kind_ = SourceKind::Capacitive;
            c_src_ = -1.0 / (omega_ * x);
        }
    }

    double source(double t) const { return v_peak_ * std::cos(omega_ * t + phase_); }

    double input_current(double t, const Vec& x) const
    {
        switch (kind_) {
        case SourceKind::Inductive: return x(kSrc);
        case SourceKind::Capacitive: return (source(t) - x(kSrc) - x(kVin)) / r_src_;
        case SourceKind::Resistive: break;
        }
        return (source(t) - x(kVin)) / r_src_;
    }

    double node_m(const Vec& x) const
    {
        return 0.5 * (spec_.diode.R_s * x(kILp) - x(kVj1) + x(kVout) + x(kVj2));
    }

    double diode1(const Vec& x) const { return (-node_m(x) - x(kVj1)) / spec_.diode.R_s; }
    double diode2(const Vec& x) const { return (node_m(x) - x(kVout) - x(kVj2)) / spec_.diode.R_s; }

    void eval(double t, const Vec& x, Vec& f, Mat* J) const
    {
        const auto& d = spec_.diode;
        const double Rs = d.R_s;
        const double vs = source(t);
        const double i_src = input_current(t, x);
        const double vm = node_m(x);
        const double i1 = diode1(x);
        const double i2 = diode2(x);
        const double c1 = d.capacitance(x(kVj1));
        const double c2 = d.capacitance(x(kVj2));
        const double q1 = i1 - d.current(x(kVj1));
        const double q2 = i2 - d.current(x(kVj2));

        switch (kind_) {
        case SourceKind::Inductive: f(kSrc) = (vs - r_src_ * x(kSrc) - x(kVin)) / l_src_; break;
        case SourceKind::Capacitive: f(kSrc) = i_src / c_src_; break;
        case SourceKind::Resistive: f(kSrc) = -omega_ * x(kSrc); break; // unused, kept decaying
        }
        f(kVin) = (i_src - x(kILp)) / spec_.C_p;
        f(kILp) = (x(kVin) - x(kVCin) - vm) / spec_.L_p;
        f(kVCin) = x(kILp) / spec_.C_in;
        f(kVj1) = q1 / c1;
        f(kVj2) = q2 / c2;
        f(kVout) = (i2 - x(kVout) / spec_.R_load) / spec_.C_out;

        if (!J)
            return;
        Mat& A = *J;
        A.setZero();
        // d i_src / dx
        Eigen::Matrix<double, 1, kDim> di_src = Eigen::Matrix<double, 1, kDim>::Zero();
        switch (kind_) {
        case SourceKind::Inductive:
            di_src(kSrc) = 1.0;
            A(kSrc, kSrc) = -r_src_ / l_src_;
            A(kSrc, kVin) = -1.0 / l_src_;
            break;
        case SourceKind::Capacitive:
            di_src(kSrc) = -1.0 / r_src_;
            di_src(kVin) = -1.0 / r_src_;
            A.row(kSrc) = di_src / c_src_;
            break;
        case SourceKind::Resistive:
            di_src(kVin) = -1.0 / r_src_;
            A(kSrc, kSrc) = -omega_;
            break;
        }
        A.row(kVin) = di_src / spec_.C_p;
        A(kVin, kILp) -= 1.0 / spec_.C_p;

        // node m and diode branch currents are linear in x
        Eigen::Matrix<double, 1, kDim> dvm = Eigen::Matrix<double, 1, kDim>::Zero();
        dvm(kILp) = 0.5 * Rs;
        dvm(kVj1) = -0.5;
        dvm(kVout) = 0.5;
        dvm(kVj2) = 0.5;
        Eigen::Matrix<double, 1, kDim> di1 = -dvm / Rs;
        di1(kVj1) -= 1.0 / Rs;
        Eigen::Matrix<double, 1, kDim> di2 = dvm / Rs;
        di2(kVout) -= 1.0 / Rs;
        di2(kVj2) -= 1.0 / Rs;

        A.row(kILp) = -dvm / spec_.L_p;
        A(kILp, kVin) += 1.0 / spec_.L_p;
        A(kILp, kVCin) -= 1.0 / spec_.L_p;
        A(kVCin, kILp) = 1.0 / spec_.C_in;

        A.row(kVj1) = di1 / c1;
        A(kVj1, kVj1) -= d.conductance(x(kVj1)) / c1 + q1 * d.capacitance_slope(x(kVj1)) / (c1 * c1);
        A.row(kVj2) = di2 / c2;
        A(kVj2, kVj2) -= d.conductance(x(kVj2)) / c2 + q2 * d.capacitance_slope(x(kVj2)) / (c2 * c2);

        A.row(kVout) = di2 / spec_.C_out;
        A(kVout, kVout) -= 1.0 / (spec_.R_load * spec_.C_out);
    }

    double omega() const { return omega_; }
    double v_peak() const { return v_peak_; }
    const RectifierSpec& spec() const { return spec_; }

    /// Absolute tolerances per state: volts and amperes.
    Vec abs_tol() const
    {
        const double vscale = std::max(v_peak_, 1e-3);
        const double iscale = vscale / std::max(r_src_, 1.0);
        Vec a;
        a << (kind_ == SourceKind::Inductive ? iscale : vscale), vscale, iscale, vscale, vscale, vscale,
            vscale;
        return a * 1e-9;
    }

private:
    const RectifierSpec& spec_;
    double omega_;
    double v_peak_;
    double phase_;
    double r_src_;
    double l_src_ = 0.0;
    double c_src_ = 0.0;
    SourceKind kind_ = SourceKind::Resistive;
};

// Junction voltage limiting for Newton updates (the classic pn-junction rule).
double limit_junction(double v_new, double v_old, double nvt, double v_crit)
{
    if (v_new > v_crit && std::abs(v_new - v_old) > 2.0 * nvt) {
        if (v_old > 0.0) {
            const double arg = 1.0 + (v_new - v_old) / nvt;
            return arg > 0.0 ? v_old + nvt * std::log(arg) : v_crit;
        }
        return nvt * std::log(v_new / nvt);
    }
    return v_new;
}

// TR-BDF2 integrator over one step, with optional sensitivity propagation.
class Stepper {
public:
    Stepper(const Circuit& c, const SteadyStateOptions& opts) : c_(c), opts_(opts)
    {
        const auto& d = c.spec().diode;
        nvt_ = d.n * d.thermal_voltage();
        v_crit_ = nvt_ * std::log(nvt_ / (std::sqrt(2.0) * d.I_s));
        atol_ = c.abs_tol();
    }

    // Advances x (and S = dx/dx0 if given) from t over h. Returns false if a
    // Newton solve failed even after halving the step max_step_halvings times.
    bool advance(double t, double h, Vec& x, Mat* S, int depth = 0) const
    {
        Vec x_try = x;
        Mat S_try;
        if (S)
            S_try = *S;
        if (single(t, h, x_try, S ? &S_try : nullptr)) {
            x = x_try;
            if (S)
                *S = S_try;
            return true;
        }
        if (depth >= opts_.max_step_halvings)
            return false;
        return advance(t, 0.5 * h, x, S, depth + 1) && advance(t + 0.5 * h, 0.5 * h, x, S, depth + 1);
    }

private:
    static constexpr double kGamma = 2.0 - 1.4142135623730951;

    // Solves y - a h f(t, y) = rhs by damped Newton, starting from y.
    bool implicit(double t, double ah, const Vec& rhs, Vec& y, Mat& J) const
    {
        Vec f;
        for (int it = 0; it < 60; ++it) {
            c_.eval(t, y, f, &J);
            const Vec g = y - ah * f - rhs;
            const Mat A = Mat::Identity() - ah * J;
            Eigen::PartialPivLU<Mat> lu(A);
            Vec dy = -lu.solve(g);
            if (!dy.allFinite())
                return false;
            Vec y_new = y + dy;
            y_new(kVj1) = limit_junction(y_new(kVj1), y(kVj1), nvt_, v_crit_);
            y_new(kVj2) = limit_junction(y_new(kVj2), y(kVj2), nvt_, v_crit_);
            const Vec step = y_new - y;
            y = y_new;
            double err = 0.0;
            for (int i = 0; i < kDim; ++i)
                err = std::max(err, std::abs(step(i)) / (atol_(i) * 1e-3 + 1e-12 * std::abs(y(i))));
            if (err <= 1.0) {
                c_.eval(t, y, f, &J);
                return true;
            }
        }
        return false;
    }

    bool single(double t, double h, Vec& x, Mat* S) const
    {
        const double g = kGamma;
        Vec f0;
        Mat J0;
        c_.eval(t, x, f0, S ? &J0 : nullptr);

        // trapezoidal stage to t + g h
        const double a1 = 0.5 * g * h;
        Vec xg = x + g * h * f0; // explicit predictor
        Mat Jg;
        if (!implicit(t + g * h, a1, x + a1 * f0, xg, Jg)) {
            xg = x;
            if (!implicit(t + g * h, a1, x + a1 * f0, xg, Jg))
                return false;
        }
        // BDF2 stage to t + h
        const double den = g * (2.0 - g);
        const double a2 = (1.0 - g) / (2.0 - g) * h;
        const Vec rhs = (xg - (1.0 - g) * (1.0 - g) * x) / den;
        Vec x1 = xg;
        Mat J1;
        if (!implicit(t + h, a2, rhs, x1, J1))
            return false;

        if (S) {
            const Mat Sg = (Mat::Identity() - a1 * Jg).partialPivLu().solve((Mat::Identity() + a1 * J0) * *S);
            const Mat r2 = (Sg - (1.0 - g) * (1.0 - g) * *S) / den;
            *S = (Mat::Identity() - a2 * J1).partialPivLu().solve(r2);
        }
        x = x1;
        return true;
    }

    const Circuit& c_;
    const SteadyStateOptions& opts_;
    double nvt_ = 0.0;
    double v_crit_ = 0.0;
    Vec atol_;
};

struct PeriodResult {
    Vec end;
    Mat monodromy;
    std::vector<Vec> samples; // states at t_k, k = 0..N-1
};

PeriodResult integrate_period(const Circuit& c, const Stepper& st, const Vec& x0, int steps,
                              bool sensitivities, bool keep_samples)
{
    const double T = 2.0 * kPi / c.omega();
    const double h = T / steps;
    PeriodResult r;
    r.end = x0;
    r.monodromy = Mat::Identity();
    if (keep_samples)
        r.samples.reserve(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k) {
        if (keep_samples)
            r.samples.push_back(r.end);
        if (!st.advance(k * h, h, r.end, sensitivities ? &r.monodromy : nullptr)) {
            throw StiffnessError("rectifier integration failed: step size underflow near t = " +
                                     std::to_string(k * h) + " s",
                                 h / std::pow(2.0, 12));
        }
    }
    return r;
}

double residual_norm(const Vec& r, const Vec& a, const Vec& b, const Vec& atol, double rtol)
{
    double e = 0.0;
    for (int i = 0; i < kDim; ++i) {
        const double scale = atol(i) + rtol * std::max(std::abs(a(i)), std::abs(b(i)));
        e = std::max(e, std::abs(r(i)) / scale);
    }
    return e;
}

SteadyState finish(const Circuit& c, const RectifierSpec& spec, const PeriodResult& per,
                   const SteadyStateOptions& opts, double f, double p_dbm, cplx z_src)
{
    const int N = opts.steps_per_period;
    const double T = 1.0 / f;
    const double h = T / N;
    SteadyState ss;
    ss.frequency = f;
    ss.p_avail_dbm = p_dbm;
    ss.z_src = z_src;
    ss.v_source_peak = c.v_peak();
    ss.p_available = c.v_peak() * c.v_peak() / (8.0 * z_src.real());

    const auto& d = spec.diode;
    cplx V1 = 0.0, I1 = 0.0;
    std::vector<cplx> harm(6, 0.0);
    double sum_vout = 0.0, p_in = 0.0, p_load = 0.0, p_j = 0.0, p_rs = 0.0;
    for (int k = 0; k < N; ++k) {
        const Vec& x = per.samples[static_cast<std::size_t>(k)];
        const double t = k * h;
        const double i_in = c.input_current(t, x);
        const double i1 = c.diode1(x);
        const double i2 = c.diode2(x);
        ss.time.push_back(t);
        ss.v_in.push_back(x(kVin));
        ss.i_in.push_back(i_in);
        ss.v_out.push_back(x(kVout));
        ss.i_d1.push_back(i1);
        ss.i_d2.push_back(i2);
        ss.v_j1.push_back(x(kVj1));
        ss.v_j2.push_back(x(kVj2));

        const double wt = c.omega() * t;
        const cplx e(std::cos(wt), -std::sin(wt));
        V1 += x(kVin) * e;
        I1 += i_in * e;
        for (std::size_t hh = 0; hh < harm.size(); ++hh) {
            const double a = static_cast<double>(hh) * wt;
            harm[hh] += i_in * cplx(std::cos(a), -std::sin(a));
        }
        sum_vout += x(kVout);
        p_in += x(kVin) * i_in;
        p_load += x(kVout) * x(kVout) / spec.R_load;
        p_j += x(kVj1) * d.current(x(kVj1)) + x(kVj2) * d.current(x(kVj2));
        p_rs += d.R_s * (i1 * i1 + i2 * i2);
    }
    const double inv = 1.0 / N;
    ss.v_dc = sum_vout * inv;
    ss.p_delivered = p_in * inv;
    ss.p_load = p_load * inv;
    ss.p_junction = p_j * inv;
    ss.p_series = p_rs * inv;
    for (std::size_t hh = 0; hh < harm.size(); ++hh)
        ss.i_in_harmonics.push_back(std::abs(harm[hh]) * inv * (hh == 0 ? 1.0 : 2.0));
    if (std::abs(I1) > 0.0 && c.v_peak() > 0.0)
        ss.z_in = V1 / I1;
    return ss;
}

} // namespace

SteadyState steady_state_vpk(const RectifierSpec& spec, double f, double v_peak, cplx z_src,
                             const SteadyStateOptions& opts)
{
    spec.validate();
    if (!(z_src.real() > 0.0))
        throw ConfigError("source impedance must have a positive real part");
    if (!(f > 0.0))
        throw ConfigError("frequency must be positive");
    if (!(v_peak >= 0.0) || !std::isfinite(v_peak))
        throw ConfigError("source amplitude must be finite and non-negative");
    if (opts.steps_per_period < 16)
        throw ConfigError("steps_per_period must be >= 16");

    const double p_dbm = v_peak > 0.0
        ? 10.0 * std::log10(v_peak * v_peak / (8.0 * z_src.real()) / 1e-3)
        : -std::numeric_limits<double>::infinity();

    const Circuit circuit(spec, f, v_peak, z_src, opts.start_phase);
    const Stepper stepper(circuit, opts);
    const int N = opts.steps_per_period;
    const Vec atol = circuit.abs_tol();

    Vec x = Vec::Zero();
    for (int p = 0; p < opts.warmup_periods; ++p)
        x = integrate_period(circuit, stepper, x, N, false, false).end;

    // Shooting on x0 -> Phi(x0) - x0 with the exact discrete monodromy.
    int iterations = 0;
    double res = std::numeric_limits<double>::infinity();
    bool converged = false;
    auto per = integrate_period(circuit, stepper, x, N, true, false);
    for (; iterations < opts.max_shooting_iterations; ++iterations) {
        const Vec r = per.end - x;
        res = residual_norm(r, x, per.end, atol, opts.rel_tol);
        if (res <= 1.0) {
            converged = true;
            break;
        }
        // Newton step, then one plain period so the strongly damped junction
        // modes relax before the next linearization.
        const Mat A = per.monodromy - Mat::Identity();
        Vec x_next = x + A.fullPivLu().solve(-r);
        bool ok = x_next.allFinite();
        if (ok) {
            try {
                x_next = integrate_period(circuit, stepper, x_next, N, false, false).end;
            } catch (const StiffnessError&) {
                ok = false;
            }
        }
        x = ok ? x_next : per.end;
        per = integrate_period(circuit, stepper, x, N, true, false);
    }

    if (!converged) {
        for (int p = 0; p < opts.max_periods; ++p) {
            x = per.end;
            per = integrate_period(circuit, stepper, x, N, false, false);
            res = residual_norm(per.end - x, x, per.end, atol, opts.rel_tol);
            if (res <= 1.0) {
                converged = true;
                break;
            }
        }
    }
    if (!converged)
        throw ConvergenceError("rectifier steady state did not converge (residual " + std::to_string(res) + ")", res);

    const auto final_period = integrate_period(circuit, stepper, x, N, false, true);
    auto ss = finish(circuit, spec, final_period, opts, f, p_dbm, z_src);
    ss.periodicity_residual = residual_norm(final_period.end - x, x, final_period.end, atol, opts.rel_tol);
    ss.shooting_iterations = iterations;
    return ss;
}

SteadyState steady_state(const RectifierSpec& spec, double f, double p_avail_dbm, cplx z_src,
                         const SteadyStateOptions& opts)
{
    if (!(z_src.real() > 0.0))
        throw ConfigError("source impedance must have a positive real part");
    if (std::isnan(p_avail_dbm) || p_avail_dbm == std::numeric_limits<double>::infinity())
        throw ConfigError("available power must be finite or -inf");
    double v_peak = 0.0;
    if (std::isfinite(p_avail_dbm))
        v_peak = std::sqrt(8.0 * z_src.real() * 1e-3 * std::pow(10.0, p_avail_dbm / 10.0));
    auto ss = steady_state_vpk(spec, f, v_peak, z_src, opts);
    ss.p_avail_dbm = p_avail_dbm;
    return ss;
}

std::vector<ImpedancePoint> impedance_sweep(const RectifierSpec& spec, double f,
                                            const std::vector<double>& p_dbm, cplx z_src,
                                            const SteadyStateOptions& opts)
{
    std::vector<ImpedancePoint> out(p_dbm.size());
    const auto n = static_cast<long long>(p_dbm.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < n; ++i) {
        auto& pt = out[static_cast<std::size_t>(i)];
        pt.p_dbm = p_dbm[static_cast<std::size_t>(i)];
        try {
            pt.state = steady_state(spec, f, pt.p_dbm, z_src, opts);
        } catch (const NumericalError& e) {
            pt.error = e.what();
        }
    }
    return out;
}

DcTransfer dc_transfer(const RectifierSpec& spec, const SteadyState& ss, EfficiencyBasis basis)
{
    DcTransfer r;
    r.v_dc = ss.v_dc;
    r.p_dc = ss.v_dc * ss.v_dc / spec.R_load;
    const double denom = basis == EfficiencyBasis::Delivered ? ss.p_delivered : ss.p_available;
    r.efficiency = denom > 0.0 ? r.p_dc / denom : 0.0;
    return r;
}

DcTransfer dc_transfer(const RectifierSpec& spec, double f, double p_in_dbm, cplx z_src,
                       EfficiencyBasis basis, const SteadyStateOptions& opts)
{
    return dc_transfer(spec, steady_state(spec, f, p_in_dbm, z_src, opts), basis);
}

std::vector<double> power_range(double start_dbm, double stop_dbm, double step_db)
{
    if (!(step_db > 0.0) || stop_dbm < start_dbm)
        throw ConfigError("power range needs step > 0 and stop >= start");
    std::vector<double> out;
    const auto n = static_cast<int>(std::floor((stop_dbm - start_dbm) / step_db + 1e-9));
    for (int i = 0; i <= n; ++i)
        out.push_back(start_dbm + i * step_db);
    return out;
}

void write_rectifier_csv(std::ostream& os, const RectifierSpec& spec,
                         const std::vector<ImpedancePoint>& pts, EfficiencyBasis basis)
{
    os << "p_dbm,R_ohm,X_ohm,vdc_v,pdc_w,eff\n";
    char buf[256];
    for (const auto& p : pts) {
        if (!p.state) {
            std::snprintf(buf, sizeof buf, "%.9g,,,,,\n", p.p_dbm);
        } else {
            const auto dc = dc_transfer(spec, *p.state, basis);
            std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", p.p_dbm,
                          p.state->z_in.real(), p.state->z_in.imag(), dc.v_dc, dc.p_dc, dc.efficiency);
        }
        os << buf;
    }
}

} // namespace pixrect
