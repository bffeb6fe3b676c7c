#include "twistcalc/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "twistcalc/errors.hpp"

namespace twistcalc {

double pairwise_nuclear_repulsion(const std::vector<Nucleus>& nuclei) {
    double e0 = 0.0;
    for (std::size_t a = 0; a < nuclei.size(); ++a)
        for (std::size_t b = a + 1; b < nuclei.size(); ++b)
            e0 += nuclei[a].charge * nuclei[b].charge /
                  (nuclei[a].position - nuclei[b].position).norm();
    return e0;
}

MoleculeConfig MoleculeConfig::make(int dim, int electrons, int external,
                                    std::vector<Nucleus> nuclei,
                                    std::optional<double> nuclear_repulsion) {
    if (dim < 1 || dim > 3) throw DimensionError("dimension must be 1, 2 or 3");
    if (electrons < 1) throw DimensionError("at least one electron is required");
    if (external < 1 || external > electrons)
        throw DimensionError("external electron count must lie in [1, N]");
    if (nuclei.empty()) throw DimensionError("at least one nucleus is required");
    for (const auto& n : nuclei) {
        if (n.position.size() != dim) throw DimensionError("nucleus position has wrong dimension");
        if (!(n.charge > 0.0)) throw DimensionError("nuclear charges must be positive");
    }
    for (std::size_t a = 0; a < nuclei.size(); ++a)
        for (std::size_t b = a + 1; b < nuclei.size(); ++b)
            if ((nuclei[a].position - nuclei[b].position).norm() == 0.0)
                throw NotAdmissibleError("nuclei must be distinct");

    MoleculeConfig c;
    c.dim = dim;
    c.electrons = electrons;
    c.external = external;
    c.nuclei = std::move(nuclei);
    if (dim == 3) {
        c.nuclear_repulsion = pairwise_nuclear_repulsion(c.nuclei);
        if (nuclear_repulsion &&
            std::abs(*nuclear_repulsion - c.nuclear_repulsion) >
                1e-12 * std::max(1.0, std::abs(c.nuclear_repulsion)))
            throw DimensionError("supplied nuclear repulsion disagrees with the Coulomb sum");
    } else {
        c.nuclear_repulsion = nuclear_repulsion.value_or(0.0);
    }
    return c;
}

void require_dimension(const PointTuple& points, int dim, const char* what) {
    for (const auto& p : points)
        if (p.size() != dim) throw DimensionError(std::string(what) + ": point has wrong dimension");
}

namespace {

std::optional<RegionLabel> scan_tuple(const MoleculeConfig& config, const PointTuple& x,
                                      double tol, int tuple) {
    for (std::size_t j = 0; j < x.size(); ++j)
        for (std::size_t jj = j + 1; jj < x.size(); ++jj)
            if ((x[j] - x[jj]).norm() <= tol)
                return RegionLabel{Region::ElectronCollision,
                                   std::pair<int, int>(int(j) + 1, int(jj) + 1), tuple};
    for (std::size_t j = 0; j < x.size(); ++j)
        for (std::size_t l = 0; l < config.nuclei.size(); ++l)
            if ((x[j] - config.nuclei[l].position).norm() <= tol)
                return RegionLabel{Region::NuclearCollision,
                                   std::pair<int, int>(int(j) + 1, int(l) + 1), tuple};
    return std::nullopt;
}

}  // namespace

RegionLabel classify_configuration(const MoleculeConfig& config, const PointTuple& x,
                                   const std::optional<PointTuple>& x_prime, double tol) {
    require_dimension(x, config.dim, "classify_configuration");
    if (auto hit = scan_tuple(config, x, tol, 0)) return *hit;
    if (x_prime) {
        require_dimension(*x_prime, config.dim, "classify_configuration");
        if (x_prime->size() != x.size())
            throw DimensionError("paired configurations must have equal length");
        if (auto hit = scan_tuple(config, *x_prime, tol, 1)) return *hit;
        for (std::size_t j = 0; j < x.size(); ++j)
            for (std::size_t jj = 0; jj < x_prime->size(); ++jj)
                if ((x[j] - (*x_prime)[jj]).norm() <= tol)
                    return RegionLabel{Region::CrossCollision,
                                       std::pair<int, int>(int(j) + 1, int(jj) + 1), 0};
    }
    return RegionLabel{};
}

double separation_radius(const MoleculeConfig& config, const PointTuple& x0) {
    require_dimension(x0, config.dim, "separation_radius");
    double r0 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x0.size(); ++j) {
        for (const auto& n : config.nuclei) r0 = std::min(r0, (x0[j] - n.position).norm());
        for (std::size_t jj = j + 1; jj < x0.size(); ++jj)
            r0 = std::min(r0, (x0[j] - x0[jj]).norm());
    }
    if (!(r0 > 0.0)) throw NotAdmissibleError("base configuration lies on a collision set");
    return r0;
}

Eigen::VectorXd flatten(const PointTuple& points) {
    if (points.empty()) return Eigen::VectorXd();
    const auto d = points.front().size();
    Eigen::VectorXd out(d * Eigen::Index(points.size()));
    for (std::size_t j = 0; j < points.size(); ++j) out.segment(Eigen::Index(j) * d, d) = points[j];
    return out;
}

PointTuple unflatten(const Eigen::VectorXd& flat, int dim) {
    if (dim <= 0 || flat.size() % dim != 0) throw DimensionError("flat vector length not divisible by dim");
    PointTuple out(std::size_t(flat.size() / dim));
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = flat.segment(Eigen::Index(j) * dim, dim);
    return out;
}

}  // namespace twistcalc
