#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "streamline/synth.hpp"

namespace streamline {

// Multi-indices are bitmasks over the axes: bit i set <=> dx_{i+1} present.
using MultiIndex = unsigned;

// Increasing multi-indices of degree k in lexicographic order.
std::vector<MultiIndex> multi_indices(int n, int k);
// "13" for dx1^dx3; "0" for the empty index.
std::string index_name(MultiIndex I);
MultiIndex parse_index(const std::string& name, int n);
int degree(MultiIndex I);

// Sign of dx_i ^ dx_I relative to dx_{I+i}; 0 when i is in I.
int wedge_sign(int i, MultiIndex I);
// Sign of the permutation (I, I^c) of (1..n).
int star_sign(MultiIndex I, int n);

struct FormValues {
  int n = 0;
  int k = 0;
  std::array<double, 16> c{};

  double norm2() const;
};

FormValues hodge_star(const FormValues& w);
// Wedge of a 1-form g (components g[0..n-1]) with w.
FormValues wedge_1form(const Vec& g, const FormValues& w);

struct KForm {
  int n = 0;
  int k = 0;
  std::map<MultiIndex, Expression> coeffs;  // expressions over x1..xn

  // coeffs is keyed by index names like "12"; parameters are bound here.
  static KForm make(int n, int k, const std::map<std::string, std::string>& coeffs,
                    const ParamMap& params = {});
  std::optional<FormValues> at(const Vec& x) const;
};

std::optional<FormValues> exterior_d(const KForm& f, const Vec& x);

// Form values and their gradients at a point.
struct FormJet {
  FormValues value;
  std::array<Vec, 16> grad{};  // grad[I][i] = d_i c_I
};

// beta = *df for a potential, or *alpha for a closed raw form; the
// synthesized field is omega = beta / rho(psi(|beta|^2)).
class StreamForm {
 public:
  static StreamForm potential(const KForm& f);
  // Validates d alpha = 0 at 1000 points of the box (1e-8).
  static StreamForm raw(const KForm& alpha, const GridSpec& validation_box);

  int n() const { return form_.n; }
  // Degree of the synthesized field omega.
  int k() const;
  bool is_potential() const { return potential_; }
  const KForm& form() const { return form_; }

  std::optional<FormJet> beta(const Vec& x) const;

 private:
  KForm form_;
  bool potential_ = true;
};

struct FormRecord {
  FormValues omega;
  PointRecord record;  // record.w is unused
};

FormRecord synthesize_form(const DensityModel& model, const StreamForm& f,
                           const BranchPolicy& policy, const Vec& x, const SynthOptions& opts);

struct FormSolution {
  GridSpec grid;
  int k = 0;
  std::vector<FormRecord> points;
};

FormSolution synthesize_forms(const DensityModel& model, const StreamForm& f,
                              const BranchPolicy& policy, const GridSpec& grid,
                              const SynthOptions& opts);

struct GammaWitness {
  bool defined = false;
  bool rank_deficient = false;
  Vec gamma{};
  Vec gamma1{};
  // Max-norm residual of d beta = Gamma1 ^ beta.
  double defect = std::numeric_limits<double>::quiet_NaN();
  // Max-norm residual of d omega = Gamma ^ omega.
  double defining_residual = std::numeric_limits<double>::quiet_NaN();
};

// Gamma1 is the minimum-norm least-squares solution of d beta = Gamma1 ^ beta
// and Gamma = Gamma1 - d log rho(psi(|beta|^2)).
GammaWitness gamma_witness(const DensityModel& model, const StreamForm& f, const FormRecord& rec,
                           const Vec& x, const Tolerances& tol);

// Sign s with delta = s * d * on k-forms in n dimensions.
int codifferential_sign(int n, int k);

}  // namespace streamline
