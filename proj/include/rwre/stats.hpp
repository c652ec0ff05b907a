#pragma once

// Estimators and hypothesis tests: velocity, displacement decay, slab overlap
// profiles, intersection expectations, the non-intersection certificate, coupling
// checks, and slab i.i.d. checks.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rwre/backward_path.hpp"
#include "rwre/env_model.hpp"
#include "rwre/parallel.hpp"
#include "rwre/regeneration.hpp"

namespace rwre {

// ---------------------------------------------------------------------------
// Test primitives

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;  // 1 when dof == 0
};

double chi_square_sf(double statistic, int dof);

// Goodness of fit of category counts against probabilities.
ChiSquareResult chi_square_gof(std::span<const std::uint64_t> counts, std::span<const double> probs);

// Contingency independence test; all-zero rows and columns are dropped.
ChiSquareResult chi_square_independence(const std::vector<std::vector<std::uint64_t>>& table);

// Two samples of category labels; categories with fewer than min_cell pooled
// observations are merged into one.
ChiSquareResult two_sample_chi_square(std::span<const int> a, std::span<const int> b, std::uint64_t min_cell = 10);

// Kolmogorov-Smirnov test of samples against Uniform(0, 1), asymptotic p-value.
double ks_uniform_p_value(std::vector<double> samples);

// Sample autocorrelation at the given lag; NaN for zero variance.
double autocorrelation(std::span<const double> xs, int lag);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};
MeanSe mean_se(std::span<const double> xs);

// Smallest v with P(Binomial(trials, p) > v) < alpha.
std::uint64_t binomial_upper_quantile(std::uint64_t trials, double p, double alpha);

// ---------------------------------------------------------------------------
// Velocity

struct VelocityReport {
  std::vector<double> direct;          // mean of X_n / n
  std::vector<double> direct_radius;   // 3 sigma per coordinate
  std::vector<double> renewal;         // sum K(u) / sum u over a slab stream
  std::vector<double> renewal_radius;  // 3 sigma, delta method
  std::size_t slabs = 0;
  bool agree = false;                  // within combined 3 sigma on every coordinate
};

struct VelocityOptions {
  std::size_t slab_count = 10000;
  SlabStreamOptions stream{};
};

VelocityReport velocity_estimate(const std::shared_ptr<const SiteLaw>& law, std::int64_t steps, std::size_t reps,
                                 RngKey key, const VelocityOptions& opts = {});

// Renewal-reward ratio estimator with 3 sigma radius.
std::pair<std::vector<double>, std::vector<double>> renewal_velocity(const SlabStream& stream);

// ---------------------------------------------------------------------------
// Decay fits

struct DecayFit {
  std::vector<double> xs;
  std::vector<double> ys;
  double slope = 0.0;
  double intercept = 0.0;  // log C
  double stderr_slope = 0.0;
};

// Least squares on (log x, log y); needs >= 3 points and every y > 0.
DecayFit fit_loglog(std::span<const double> xs, std::span<const double> ys);

struct DisplacementRow {
  int n = 0;
  double sup = 0.0;
  double sup_se = 0.0;
  double l2 = 0.0;  // sqrt(sum_z p_n(z)^2), split-sample estimate
  double l2_se = 0.0;
  std::uint64_t max_count = 0;
};

struct DisplacementProfile {
  std::vector<DisplacementRow> rows;
  DecayFit sup_fit;
  DecayFit l2_fit;
};

// Law of the n-slab displacement sum, resampling slabs i.i.d. from the stream.
DisplacementProfile displacement_profile(const SlabStream& stream, std::span<const int> n_values, std::size_t reps,
                                         RngKey key, Parallelism par = {});

// ---------------------------------------------------------------------------
// Overlaps and the non-intersection certificate

inline constexpr double kFlatteningFraction = 0.05;

// Fraction of the final value contributed by the last quarter of a partial-sum series.
double last_quarter_fraction(std::span<const double> partial_sums);

struct OverlapReport {
  std::size_t reps = 0;
  // Backward path copies, index k-1 for the k-th slab below the origin.
  std::vector<double> per_n;         // E|V_A(k) ∩ V_B(k)| = sum_z Q(z,k)^2
  std::vector<double> per_n_se;
  std::vector<double> partial_sums;  // cumulative per_n
  std::vector<double> partial_se;
  std::vector<double> m_partial;     // E|T'_A(k) ∩ T'_B(k)| with T'(k) the first k slabs plus the origin
  std::vector<double> m_partial_se;
  double m_hat = 0.0;
  double m_hat_se = 0.0;
  std::map<std::int64_t, double> tail_a;  // squared radius -> common sites per pair
  double extent_a = 0.0;                  // median max radius of a sampled T'
  double mean_visited = 0.0;              // E|K[0,u)| = sum_z Q(z,0)
  double mean_u = 0.0;
  double mean_visited_first_half = 0.0;
  double mean_visited_second_half = 0.0;

  // Conditioned walk copies (StayBelowStart, mirrored law).
  std::size_t tilde_reps = 0;
  double m_tilde_hat = 0.0;
  double m_tilde_se = 0.0;
  std::vector<double> m_tilde_partial;  // by level depth 1..D
  std::map<std::int64_t, double> tail_b;
  double extent_b = 0.0;
  double tilde_acceptance = 0.0;
};

OverlapReport hitting_profile(const SlabStream& stream_a, const SlabStream& stream_b, int n_max, std::size_t reps,
                              RngKey key, Parallelism par = {});

// Fills the conditioned-walk half of the report.
void conditioned_overlap(OverlapReport& report, const std::shared_ptr<const SiteLaw>& mirrored, std::int64_t horizon,
                         std::size_t reps, RngKey key, Parallelism par = {});

double tail_mass(const std::map<std::int64_t, double>& hist, double radius);

struct Certificate {
  double radius = 0.0;
  double norm_z0 = 0.0;
  double lambda_cs = 0.0;
  double value = 0.0;     // lambda M + lambda M~ + lambda^2
  double value_cs = 0.0;  // sqrt(lambda M) + sqrt(lambda M~) + lambda
  bool converged = false;
  bool separated = false;  // ||z0|| > 2R and level(z0) < 0
  bool pass = false;
  std::string reason;
};

Certificate certify_nonintersection(const OverlapReport& report, const Site& z0, double radius);

// Smallest integer R with ||z0|| > 2R whose tail mass is at most target.
std::optional<double> tune_radius(const OverlapReport& report, const Site& z0, double target_lambda);

struct IntersectionReport {
  std::size_t reps = 0;
  double direct = 0.0;   // mean |T'_A ∩ (z0 + T~_B)| over matched pairs
  double direct_se = 0.0;
  double product = 0.0;  // same count over cross-matched independent pairs
  double product_se = 0.0;
  double p_empty = 0.0;
  double p_empty_se = 0.0;
  bool agree = false;
  double acceptance = 0.0;
};

struct IntersectionOptions {
  int n_slabs = 64;
  std::int64_t horizon = 1000;
  int cross_shifts = 4;
  Parallelism par{};
};

IntersectionReport intersection_expectation(const SlabStream& pool, const std::shared_ptr<const SiteLaw>& mirrored,
                                            const Site& z0, std::size_t reps, RngKey key,
                                            const IntersectionOptions& opts = {});

// ---------------------------------------------------------------------------
// Coupling, transience, and slab law checks

struct CouplingReport {
  std::size_t sites = 0;
  std::size_t path_sites = 0;
  bool off_path_agree = true;
  double marginal_p = 1.0;
  double independence_p = 1.0;
  double adjacency_p = 1.0;
};

// Samples distinct sites uniformly from the covered levels times a transverse box
// [-halfwidth, halfwidth]^(d-1).
CouplingReport coupling_tests(const GluedWorld& world, std::size_t sites, RngKey key, int halfwidth = 2,
                              Which which = Which::Omega);

struct CouplingStudy {
  std::size_t worlds = 0;
  std::size_t off_path_failures = 0;
  std::size_t marginal_pass = 0;      // worlds with p > 0.01
  std::size_t independence_pass = 0;
  std::size_t adjacency_pass = 0;
  std::size_t required = 0;           // ceil(0.97 * worlds)
  double ks_p = 1.0;                  // uniformity of the marginal p-values
  bool degenerate = false;            // single-atom law: every test is vacuous
  bool pass = false;
  std::vector<double> marginal_p;
  std::vector<double> independence_p;
};

// Independent coupled worlds of 2 n_slabs slabs resampled from the pool, each
// checked with coupling_tests.
CouplingStudy coupling_study(const SlabStream& pool, std::size_t worlds, int n_slabs, std::size_t sites, RngKey key,
                             Parallelism par = {});

struct TransienceReport {
  std::size_t walks = 0;
  std::vector<double> b_hat;  // index N-1
  std::vector<double> b_se;
  double top_exit_fraction = 0.0;
  std::size_t censored = 0;   // walks that hit the step cap inside the region
  bool monotone = true;       // b_hat[N] >= b_hat[N-1] - 3 combined sigma
};

TransienceReport transience_profile(const SlabStream& pool, int n_back, int n_top, std::size_t walks,
                                    std::int64_t steps, RngKey key, Parallelism par = {});

struct SlabIidReport {
  std::size_t count = 0;
  double lag1_width = 0.0, lag2_width = 0.0;
  double lag1_duration = 0.0, lag2_duration = 0.0;
  double band = 0.0;  // 3 / sqrt(N)
  double two_sample_p = 1.0;
  bool degenerate = false;
  bool pass = false;
};

SlabIidReport slab_iid_test(std::span<const std::int64_t> widths, std::span<const std::int64_t> durations);
SlabIidReport slab_iid_test(std::span<const Slab> slabs);

// Category label of (L, u) given duration cut points.
std::vector<int> slab_categories(std::span<const std::int64_t> widths, std::span<const std::int64_t> durations,
                                 std::span<const std::int64_t> duration_cuts);
std::vector<std::int64_t> quartile_cuts(std::vector<std::int64_t> values);

struct GluedForwardReport {
  int index = 0;
  std::size_t forward_samples = 0;
  std::size_t glued_samples = 0;
  double p_value = 1.0;
  double forward_mean_u = 0.0;
  double glued_mean_u = 0.0;
};

// Compares (L, u) of the slab at index -i of glued worlds with the i-th slab of
// forward runs conditioned on StayPositive.
GluedForwardReport glued_vs_forward(const SlabStream& pool, int index, std::size_t samples, std::int64_t horizon,
                                    std::int64_t margin, RngKey key, Parallelism par = {});

}  // namespace rwre
