#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "streamline/synth.hpp"

namespace streamline {

// Curl: d_i w_j - d_j w_i = G_i w_j - G_j w_i. Divergence: div w = G . w.
enum class WitnessSystem { Curl, Divergence };

WitnessSystem system_for(const DriveField& d);

// w = a / rho(psi(xi)) and its analytic first derivatives.
struct FieldJet {
  int n = 0;
  Vec a{};
  Vec w{};
  Mat dw{};  // dw[i][j] = d_i w_j
  double rho = 0.0;
  Vec grad_rho{};  // gradient of x -> rho(psi(xi(x)))
};

// nullopt where the chain rule through psi is unavailable (sonic, singular
// or undefined points).
std::optional<FieldJet> field_jet(const DensityModel& model, const DriveSample& s,
                                  const PointRecord& rec);

// Pointwise defect of the Frobenius condition for a given G.
double frobenius_defect(const FieldJet& jet, const Vec& G, WitnessSystem system);

struct PointWitness {
  bool defined = false;
  bool gamma_g = false;
  Vec G{};
  Vec G1{};
  double defining_residual = std::numeric_limits<double>::quiet_NaN();
  double solvability_residual = std::numeric_limits<double>::quiet_NaN();
};

// Scalar2D or divergence-free raw drive in two dimensions:
// G1 = -M_12 (a_2, -a_1)/|a|^2 (= -lap f grad f/|grad f|^2), G = -G1 - grad rho/rho.
PointWitness witness_2d(const DensityModel& model, const DriveField& d, const PointRecord& rec,
                        const Vec& x, const Tolerances& tol);
// Divergence-free drives in n dimensions: G1 = -M a/|a|^2 with
// M_ij = d_i a_j - d_j a_i; the solvability residual measures how far
// M_ij = H_i a_j - H_j a_i is from holding for H = -G1.
PointWitness witness_nd(const DensityModel& model, const DriveField& d, const PointRecord& rec,
                        const Vec& x, const Tolerances& tol);
// Curl-free drives: G = (div a - a . grad rho/rho) a/|a|^2.
PointWitness witness_gradient(const DensityModel& model, const DriveField& d,
                              const PointRecord& rec, const Vec& x, const Tolerances& tol);

// Synthesizes at x and dispatches on the drive kind.
PointWitness witness_at(const DensityModel& model, const DriveField& d, const BranchPolicy& policy,
                        const Vec& x, const SynthOptions& opts);

using WitnessFunction = std::function<std::optional<Vec>(const Vec&)>;

struct FrobeniusWitness {
  GridSpec grid;
  WitnessSystem system = WitnessSystem::Curl;
  std::vector<std::uint8_t> defined;
  std::vector<Vec> G, G1;
  std::vector<double> defining_residual;
  std::vector<double> solvability_residual;
  // max_{i<j} |d_i G_j - d_j G_i| by central differences of the pointwise G.
  std::vector<double> curl_residual;
  double fd_step = 0.0;
};

FrobeniusWitness compute_witness(const DensityModel& model, const DriveField& d,
                                 const BranchPolicy& policy, const GridSpec& grid,
                                 const SynthOptions& opts);

// Witness grid for an arbitrary pointwise G (defining residuals left NaN).
FrobeniusWitness witness_from_function(const GridSpec& grid, WitnessSystem system,
                                       const WitnessFunction& G, int threads = 1);

struct EtaOptions {
  double tol_conservative = 1e-6;
  double tol_exactness = 1e-5;
  int loops = 20;
  unsigned long seed = 12345;
};

struct EtaResult {
  bool ok = false;
  std::string message;
  std::vector<double> eta;  // NaN where unreachable
  double max_curl = 0.0;
  Vec max_curl_location{};
  double max_loop = 0.0;
  double exactness_residual = std::numeric_limits<double>::quiet_NaN();
};

// Integrates G along axis-ordered staircase paths from the grid node nearest
// to anchor, spot-checks path independence on random rectangles, and checks
// that exp(-eta) w is closed (curl-free, or divergence-free for the
// divergence system).
EtaResult recover_eta(const FrobeniusWitness& witness, const FieldSolution& solution,
                      const Vec& anchor, const EtaOptions& options = {});

}  // namespace streamline
