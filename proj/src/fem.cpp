#include "twoball/fem.hpp"

#include <json.hpp>

#include <cstdio>
#include <map>

namespace twoball::fem {

std::array<double, 6> p2_basis(double l1, double l2, double l3)
{
    return {l1 * (2.0 * l1 - 1.0), l2 * (2.0 * l2 - 1.0), l3 * (2.0 * l3 - 1.0),
            4.0 * l1 * l2,         4.0 * l2 * l3,         4.0 * l3 * l1};
}

P2Space::P2Space(std::shared_ptr<const mesh::Mesh> mesh) : mesh_(std::move(mesh))
{
    if (!mesh_ || mesh_->triangles().empty())
        throw InvalidArgument("P2 space needs a non-empty mesh");
    const auto& v = mesh_->vertices();
    nodes_ = v;
    dof_component_.assign(v.size(), -1);
    std::map<std::pair<int, int>, int> edge_dof;
    auto edge = [&](int a, int b, int label) {
        const std::pair<int, int> key = a < b ? std::pair{a, b} : std::pair{b, a};
        const auto [it, fresh] = edge_dof.emplace(key, static_cast<int>(nodes_.size()));
        if (fresh) {
            nodes_.push_back(0.5 * (v[a] + v[b]));
            dof_component_.push_back(label);
        }
        return it->second;
    };
    dofs_.reserve(mesh_->triangles().size());
    for (std::size_t t = 0; t < mesh_->triangles().size(); ++t) {
        const mesh::Triangle& tri = mesh_->triangles()[t];
        const int label = mesh_->component_labels()[t];
        for (int k = 0; k < 3; ++k)
            dof_component_[tri[k]] = label;
        dofs_.push_back({tri[0], tri[1], tri[2], edge(tri[0], tri[1], label), edge(tri[1], tri[2], label),
                         edge(tri[2], tri[0], label)});
    }
    for (int c : dof_component_)
        if (c < 0)
            throw InvalidArgument("mesh has vertices outside every triangle");
    locator_ = std::make_unique<mesh::TriangleLocator>(*mesh_);
}

std::vector<double> P2Space::at_quadrature(const Eigen::VectorXd& u) const
{
    if (u.size() != dof_count())
        throw InvalidArgument("nodal field has the wrong length");
    constexpr int k = quad::kNodesPerTriangle;
    std::vector<double> out(dofs_.size() * k);
    for (std::size_t t = 0; t < dofs_.size(); ++t) {
        const auto& d = dofs_[t];
        for (int j = 0; j < k; ++j) {
            const auto& n = quad::kDegree4[static_cast<std::size_t>(j)];
            const auto phi = p2_basis(n.l1, n.l2, n.l3);
            double s = 0.0;
            for (int i = 0; i < 6; ++i)
                s += phi[i] * u[d[i]];
            out[t * k + j] = s;
        }
    }
    return out;
}

double P2Space::evaluate(const Eigen::VectorXd& u, const Vec2& x) const
{
    if (u.size() != dof_count())
        throw InvalidArgument("nodal field has the wrong length");
    const auto hit = locator_->locate(x);
    if (!hit)
        throw OutOfDomain("point lies outside the mesh");
    const auto& d = dofs_[static_cast<std::size_t>(hit->triangle)];
    const auto phi = p2_basis(hit->bary[0], hit->bary[1], hit->bary[2]);
    double s = 0.0;
    for (int i = 0; i < 6; ++i)
        s += phi[i] * u[d[i]];
    return s;
}

Operators assemble(std::shared_ptr<const mesh::Mesh> m, exec::Policy policy)
{
    auto space = std::make_shared<const P2Space>(m);
    const mesh::Mesh& mesh = space->mesh();
    const Geometry geometry = mesh.geometry();
    if (geometry == Geometry::Hyperbolic)
        mesh::require_weight_domain(mesh, mesh::Weight::HypVolume);

    using Local = Eigen::Matrix<double, 6, 6>;
    const std::size_t nt = mesh.triangles().size();
    std::vector<Local> ke(nt), me(nt);
    exec::for_each(policy, nt, [&](std::size_t t) {
        const mesh::Triangle& tri = mesh.triangles()[t];
        const Vec2 &a = mesh.vertices()[tri[0]], &b = mesh.vertices()[tri[1]], &c = mesh.vertices()[tri[2]];
        const double det = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
        const Vec2 g1 = Vec2(b.y() - c.y(), c.x() - b.x()) / det;
        const Vec2 g2 = Vec2(c.y() - a.y(), a.x() - c.x()) / det;
        const Vec2 g3 = Vec2(a.y() - b.y(), b.x() - a.x()) / det;
        Local k = Local::Zero(), mm = Local::Zero();
        for (int j = 0; j < quad::kNodesPerTriangle; ++j) {
            const auto& node = quad::kDegree4[static_cast<std::size_t>(j)];
            const mesh::QuadNode& q = mesh.quadrature()[t * quad::kNodesPerTriangle + j];
            const double l1 = node.l1, l2 = node.l2, l3 = node.l3;
            const std::array<Vec2, 6> grad = {(4 * l1 - 1) * g1,         (4 * l2 - 1) * g2,
                                              (4 * l3 - 1) * g3,         4 * (l1 * g2 + l2 * g1),
                                              4 * (l2 * g3 + l3 * g2),   4 * (l3 * g1 + l1 * g3)};
            const auto phi = p2_basis(l1, l2, l3);
            const double mass_w = geometry == Geometry::Hyperbolic ? mesh::weight_value(mesh::Weight::HypVolume, q.x) : 1.0;
            for (int r = 0; r < 6; ++r)
                for (int s = 0; s < 6; ++s) {
                    k(r, s) += q.weight * grad[r].dot(grad[s]);
                    mm(r, s) += q.weight * mass_w * phi[r] * phi[s];
                }
        }
        ke[t] = k;
        me[t] = mm;
    });

    std::vector<Eigen::Triplet<double>> tk, tm;
    tk.reserve(nt * 36);
    tm.reserve(nt * 36);
    for (std::size_t t = 0; t < nt; ++t) {
        const auto& d = space->element(t);
        for (int r = 0; r < 6; ++r)
            for (int s = 0; s < 6; ++s) {
                tk.emplace_back(d[r], d[s], ke[t](r, s));
                tm.emplace_back(d[r], d[s], me[t](r, s));
            }
    }
    const int n = space->dof_count();
    Operators ops{space, geometry, SparseMatrix(n, n), SparseMatrix(n, n)};
    ops.K.setFromTriplets(tk.begin(), tk.end());
    ops.M.setFromTriplets(tm.begin(), tm.end());
    return ops;
}

double EigenResult::evaluate(int index, const Vec2& x) const
{
    if (index < 0 || index >= vectors.cols())
        throw InvalidArgument("eigenvector index out of range");
    return space->evaluate(vectors.col(index), x);
}

double eigenfunction_eval(const EigenResult& result, int index, const Vec2& x)
{
    return result.evaluate(index, x);
}

std::string eigen_result_json(const EigenResult& r)
{
    nlohmann::json j;
    j["geometry"] = geom::to_string(r.geometry);
    j["eigenvalues"] = r.eigenvalues;
    j["diagnostics"] = {{"iterations", r.diagnostics.iterations},
                        {"block_size", r.diagnostics.block_size},
                        {"shift", r.diagnostics.shift},
                        {"residuals", r.diagnostics.residuals},
                        {"orthogonality_defect", r.diagnostics.orthogonality_defect},
                        {"dof_count", r.diagnostics.dof_count},
                        {"zero_modes", r.diagnostics.zero_modes}};
    return j.dump(2);
}

std::string eigen_result_csv(const EigenResult& r)
{
    std::string out = "x,y";
    for (Eigen::Index k = 0; k < r.vectors.cols(); ++k)
        out += ",u" + std::to_string(k);
    out += "\n";
    char buf[64];
    const auto& nodes = r.space->nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", nodes[i].x(), nodes[i].y());
        out += buf;
        for (Eigen::Index k = 0; k < r.vectors.cols(); ++k) {
            std::snprintf(buf, sizeof buf, ",%.17g", r.vectors(static_cast<Eigen::Index>(i), k));
            out += buf;
        }
        out += "\n";
    }
    return out;
}

} // namespace twoball::fem
