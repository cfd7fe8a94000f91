#include "kahlerlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

namespace kahlerlab::quad {

namespace {

constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};

constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the nodes at odd Kronrod positions (1, 3, 5, 7).
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

Segment kronrod15(const std::function<double(double)>& fn, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = fn(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double pair = fn(center - dx) + fn(center + dx);
    kronrod += kKronrodWeights[j] * pair;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * pair;
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace

const std::array<double, 10>& GaussLegendre10::nodes() {
  static const std::array<double, 10> x = {
      -0.9739065285171717, -0.8650633666889845, -0.6794095682990244,
      -0.4333953941292472, -0.1488743389816312, 0.1488743389816312,
      0.4333953941292472,  0.6794095682990244,  0.8650633666889845,
      0.9739065285171717};
  return x;
}

const std::array<double, 10>& GaussLegendre10::weights() {
  static const std::array<double, 10> w = {
      0.0666713443086881, 0.1494513491505806, 0.2190863625159820,
      0.2692667193099963, 0.2955242247147529, 0.2955242247147529,
      0.2692667193099963, 0.2190863625159820, 0.1494513491505806,
      0.0666713443086881};
  return w;
}

double gauss_legendre(const std::function<double(double)>& fn, double a, double b) {
  const auto& x = GaussLegendre10::nodes();
  const auto& w = GaussLegendre10::weights();
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += w[i] * fn(center + half * x[i]);
  return sum * half;
}

AdaptiveResult gauss_kronrod(const std::function<double(double)>& fn, double a,
                             double b, double abs_tol, double rel_tol,
                             std::size_t max_intervals) {
  return gauss_kronrod(fn, a, b, std::span<const double>{}, abs_tol, rel_tol,
                       max_intervals);
}

AdaptiveResult gauss_kronrod(const std::function<double(double)>& fn, double a,
                             double b, std::span<const double> breaks,
                             double abs_tol, double rel_tol,
                             std::size_t max_intervals) {
  AdaptiveResult result;
  if (a == b) {
    result.converged = true;
    return result;
  }
  const double sign = b > a ? 1.0 : -1.0;
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);

  std::vector<double> cuts{lo};
  for (double x : breaks) {
    if (x > lo && x < hi) cuts.push_back(x);
  }
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<Segment> heap;
  double total = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    Segment s = kronrod15(fn, cuts[i], cuts[i + 1]);
    result.evaluations += 15;
    total += s.value;
    error += s.error;
    heap.push(s);
  }

  auto tolerance = [&] { return std::max(abs_tol, rel_tol * std::abs(total)); };
  while (error > tolerance() && heap.size() < max_intervals) {
    Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      heap.push(worst);
      break;
    }
    Segment left = kronrod15(fn, worst.a, mid);
    Segment right = kronrod15(fn, mid, worst.b);
    result.evaluations += 30;
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }

  // Re-sum to shed the drift of the running updates.
  total = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  result.value = sign * total;
  result.error_estimate = error;
  result.converged = error <= std::max(abs_tol, rel_tol * std::abs(total));
  return result;
}

}  // namespace kahlerlab::quad
