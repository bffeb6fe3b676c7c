#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

namespace twistcalc {

using Point = Eigen::VectorXd;
using PointTuple = std::vector<Point>;

struct Nucleus {
    Point position;
    double charge;  // Z > 0
};

struct MoleculeConfig {
    int dim = 3;
    int electrons = 1;  // N
    int external = 1;   // k, the number of electrons held as x
    std::vector<Nucleus> nuclei;
    double nuclear_repulsion = 0.0;  // E0

    // E0 is the pairwise Coulomb sum when dim == 3 and the supplied value (default 0) otherwise.
    static MoleculeConfig make(int dim, int electrons, int external, std::vector<Nucleus> nuclei,
                               std::optional<double> nuclear_repulsion = std::nullopt);

    int internal() const { return electrons - external; }
};

double pairwise_nuclear_repulsion(const std::vector<Nucleus>& nuclei);

enum class Region {
    Admissible,         // U1 for a single tuple, U2 for a pair
    ElectronCollision,  // C_k
    NuclearCollision,   // R_k
    CrossCollision,     // x_j = x'_j' across the two tuples
};

struct RegionLabel {
    Region region = Region::Admissible;
    // 1-based indices: (electron, electron), (electron, nucleus) or (x index, x' index).
    std::optional<std::pair<int, int>> witness;
    int tuple = 0;  // 0 when the collision sits in x, 1 when in x'
};

// First collision found wins, checked in the order C_k, R_k for x, then x', then cross pairs.
// Distances <= tol count as collisions.
RegionLabel classify_configuration(const MoleculeConfig& config, const PointTuple& x,
                                   const std::optional<PointTuple>& x_prime = std::nullopt,
                                   double tol = 0.0);

// min over |x0_j - R_l| and |x0_j - x0_j'| (j != j'); throws NotAdmissibleError on a collision.
double separation_radius(const MoleculeConfig& config, const PointTuple& x0);

Eigen::VectorXd flatten(const PointTuple& points);
PointTuple unflatten(const Eigen::VectorXd& flat, int dim);

void require_dimension(const PointTuple& points, int dim, const char* what);

}  // namespace twistcalc
