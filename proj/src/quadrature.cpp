#include "deepiot/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

namespace deepiot {

namespace {

// Gauss-Kronrod (7,15) abscissae and weights on [-1, 1].
constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct Interval {
    double a, b;
    double value;
    double error;
    bool operator<(const Interval& o) const { return error < o.error; }
};

Interval eval_gk15(const std::function<double(double)>& f, double a, double b, int& evals) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    evals += 15;

    double kron = kWgk[7] * fc;
    double gauss = kWg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double x = h * kXgk[i];
        const double f1 = f(c - x);
        const double f2 = f(c + x);
        kron += kWgk[i] * (f1 + f2);
        if (i % 2 == 1) gauss += kWg[i / 2] * (f1 + f2);
    }
    kron *= h;
    gauss *= h;
    return Interval{a, b, kron, std::abs(kron - gauss)};
}

} // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double rel_tol, double abs_tol, int max_intervals) {
    QuadratureResult res;
    if (!(b > a)) {
        res.converged = true;
        return res;
    }

    std::priority_queue<Interval> queue;
    Interval first = eval_gk15(f, a, b, res.evaluations);
    double total = first.value;
    double total_err = first.error;
    queue.push(first);
    res.intervals = 1;

    while (total_err > std::max(abs_tol, rel_tol * std::abs(total)) && res.intervals < max_intervals) {
        Interval worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // interval no longer splittable at double precision
            queue.push(Interval{worst.a, worst.b, worst.value, 0.0});
            total_err -= worst.error;
            continue;
        }
        Interval left = eval_gk15(f, worst.a, mid, res.evaluations);
        Interval right = eval_gk15(f, mid, worst.b, res.evaluations);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        queue.push(left);
        queue.push(right);
        ++res.intervals;
    }

    res.value = total;
    res.error_estimate = total_err;
    res.converged = total_err <= std::max(abs_tol, rel_tol * std::abs(total));
    return res;
}

} // namespace deepiot
