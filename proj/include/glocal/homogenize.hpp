#ifndef GLOCAL_HOMOGENIZE_HPP
#define GLOCAL_HOMOGENIZE_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "glocal/coefficient.hpp"
#include "glocal/effective_field.hpp"
#include "glocal/linalg.hpp"
#include "glocal/mesh.hpp"

namespace glocal {

enum class CellBc { Periodic, Dirichlet };

const char* to_string(CellBc bc);
CellBc cell_bc_from_string(const std::string& s);

struct CellProblemSpec {
    Point center;
    double delta = 0.0;
    CellBc bc = CellBc::Periodic;
    std::size_t cell_n = 32;
};

/// The cell x_T + delta [-1/2, 1/2]^2 clipped to the unit square. Throws
/// GeometryError when the clipped box is degenerate.
Rect cell_box(const CellProblemSpec& spec);

struct CellResult {
    SymTensor2 tensor;
    /// |A12 - A21| / max|A_ij| before symmetrization.
    double asymmetry = 0.0;
    std::vector<std::string> warnings;
};

/// Solves div(a grad v_j) = 0 on the cell for j = 1, 2, with v_j - x_j
/// periodic or v_j = x_j on the cell boundary, and returns the symmetrized
/// tensor whose column j is the cell average of a grad v_j.
CellResult solve_cell_problem(const CellProblemSpec& spec, const CoefficientField& micro, const CgOptions& cg = {});

enum class Sampling { PerElement, PerPatch };

struct HmmPolicy {
    double delta = 0.0;
    CellBc bc = CellBc::Periodic;
    std::size_t cell_n = 32;
    Sampling sampling = Sampling::PerElement;
    /// Patches per side for PerPatch sampling; 1 gives one global sample.
    std::size_t patch_n = 1;
};

/// Periodic cells with delta = eps for periodic media, Dirichlet cells with
/// delta = 5 eps otherwise.
HmmPolicy default_hmm_policy(const CoefficientField& micro, bool periodic_media);

struct EffectiveFieldResult {
    std::shared_ptr<const EffectiveField> field;
    std::vector<std::string> warnings;
    std::size_t cell_solves = 0;
};

/// One tensor per Exterior/Layer element, sampled at the barycenter (or at
/// the center of the barycenter's patch). Defect elements carry no sample.
/// Cell problems run on `threads` workers, each writing its own slot.
EffectiveFieldResult assemble_effective_field(const Mesh& mesh, const CoefficientField& micro, const HmmPolicy& policy,
                                              std::size_t threads = 1);

/// Effective field taken directly from an analytic tensor (A_H = A).
std::shared_ptr<const EffectiveField> effective_from_analytic(const Mesh& mesh, const CoefficientField& A);

/// max over Exterior elements of |A(barycenter) - A_H|, spectral norm.
double e_hmm_report(const EffectiveField& A_H, const CoefficientField& A, const Mesh& mesh);

// Cache file: a header line "# hmm delta=<d> bc=<bc> cell_n=<n> sampling=<s>
// patch_n=<p> coefficient=<id> elements=<ne>" followed by rows
// "element_id a11 a12 a22" for every sampled element.
void write_effective_field(const std::string& path, const EffectiveField& field, const HmmPolicy& policy,
                           const std::string& coefficient_id);
std::string effective_field_header(const HmmPolicy& policy, const std::string& coefficient_id, std::size_t elements);
/// nullopt when the file is missing or its header does not match.
std::optional<EffectiveField> read_effective_field(const std::string& path, const HmmPolicy& policy,
                                                   const std::string& coefficient_id, std::size_t elements);

} // namespace glocal

#endif
