#include "kaa/brackets.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace kaa {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;

Vec6 pack(const PhaseState& s) {
    Vec6 z;
    z << s.x, s.v;
    return z;
}

PhaseState unpack(const Vec6& z) { return {z.head<3>(), z.tail<3>()}; }

void check_step(double h) {
    if (!(h > 1e-13)) throw std::invalid_argument("finite-difference step below machine-precision scale");
}

struct Bracket {
    double value;
    double scale;  // sum of absolute values of the six products
};

Bracket bracket_rows(const Eigen::MatrixXd& J, int i, int j) {
    Bracket b{0, 0};
    for (int k = 0; k < 3; ++k) {
        double t1 = J(i, k) * J(j, k + 3);
        double t2 = J(i, k + 3) * J(j, k);
        b.value += t1 - t2;
        b.scale += std::abs(t1) + std::abs(t2);
    }
    return b;
}

double levi(int j, int k, int a) {
    if (j == k || k == a || j == a) return 0.0;
    return ((k - j + 3) % 3 == 1) ? 1.0 : -1.0;
}

// Row layout shared by the future and past tables.
enum Row { XI = 0, ETA = 1, LAM = 2, U0 = 3, L0 = 6 };

void fill_table(BracketReport& rep, const Eigen::MatrixXd& J, const SICCoords& c, bool past,
                bool radial) {
    auto rel = [&](const std::string& name, int i, int j, double expected) {
        Bracket b = bracket_rows(J, i, j);
        rep.add(name, b.value, expected, std::max(1.0, b.scale));
    };
    const char* sfx = past ? "-" : "";
    auto nm = [&](const std::string& s) { return s + sfx; };

    rel(nm("{xi,eta}"), XI, ETA, 1.0);
    for (int k = 0; k < 3; ++k) {
        std::string ks = std::to_string(k + 1);
        rel(nm("{xi,u" + ks + "}"), XI, U0 + k, 0.0);
        rel(nm("{xi,L" + ks + "}"), XI, L0 + k, 0.0);
        rel(nm("{eta,u" + ks + "}"), ETA, U0 + k, 0.0);
        rel(nm("{eta,L" + ks + "}"), ETA, L0 + k, 0.0);
    }
    if (!radial) {
        const Vec3 lu = (c.L / c.L.norm()).cross(c.u);
        // With l- = l the past sign follows from the future table:
        // {lambda, L x u} = lambda u gives {lambda, u-} = -l x u- as well.
        const double sgn = -1.0;
        rel(nm("{xi,lambda}"), XI, LAM, 0.0);
        rel(nm("{eta,lambda}"), ETA, LAM, 0.0);
        for (int k = 0; k < 3; ++k) {
            std::string ks = std::to_string(k + 1);
            rel(nm("{lambda,L" + ks + "}"), LAM, L0 + k, 0.0);
            rel(nm("{lambda,u" + ks + "}"), LAM, U0 + k, sgn * lu[k]);
        }
    }
    for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
            std::string jk = std::to_string(j + 1) + std::to_string(k + 1);
            double eu = 0, eL = 0;
            for (int a = 0; a < 3; ++a) {
                eu += levi(j, k, a) * c.u[a];
                eL += levi(j, k, a) * c.L[a];
            }
            rel(nm("{L,u}" + jk), L0 + j, U0 + k, eu);
            if (j < k) {
                rel(nm("{u,u}" + jk), U0 + j, U0 + k, 0.0);
                rel(nm("{L,L}" + jk), L0 + j, L0 + k, eL);
            }
        }
    }
}

Eigen::VectorXd sic_vector(const SICCoords& c) {
    Eigen::VectorXd out(9);
    out << c.xi, c.eta, c.L.norm(), c.u, c.L;
    return out;
}

bool is_radial(const PhaseState& s) {
    return s.x.cross(s.v).norm() <= 1e-6 * s.x.norm() * s.v.norm();
}

}  // namespace

void BracketReport::add(std::string name, double numeric, double expected, double scale) {
    double r = std::abs(numeric - expected) / scale;
    if (!std::isfinite(r)) r = INFINITY;
    if (entries.empty() || r > max_residual) {
        max_residual = r;
        worst = name;
    }
    entries.push_back({std::move(name), numeric, expected, r});
}

Eigen::MatrixXd phase_jacobian(const VectorObservable& F, const PhaseState& s, double h) {
    check_step(h);
    const Vec6 z = pack(s);
    // Steps follow the size of |x| and |v| so that the stencil stays small
    // next to the origin, where the fields vary on the scale |x|.
    const double sx = std::min(1.0, s.x.norm()), sv = std::min(1.0, s.v.norm());
    Eigen::MatrixXd J;
    for (int k = 0; k < 6; ++k) {
        double hk = h * ((k < 3 ? sx : sv) + std::abs(z[k]));
        Vec6 zp = z, zm = z;
        zp[k] += hk;
        zm[k] -= hk;
        Eigen::VectorXd d = (F(unpack(zp)) - F(unpack(zm))) / (zp[k] - zm[k]);
        if (k == 0) J.resize(d.size(), 6);
        J.col(k) = d;
    }
    return J;
}

double pb_numeric(const ScalarField& f, const ScalarField& g, const PhaseState& s, double h) {
    VectorObservable F = [&](const PhaseState& p) {
        Eigen::VectorXd out(2);
        out << f.eval(p), g.eval(p);
        return out;
    };
    return bracket_rows(phase_jacobian(F, s, h), 0, 1).value;
}

double pb_action_angle(const std::function<double(const ActionAngle&)>& f,
                       const std::function<double(const ActionAngle&)>& g, const ActionAngle& aa,
                       double h) {
    check_step(h);
    Vec6 z;
    z << aa.theta, aa.a;
    std::array<double, 6> df{}, dg{};
    for (int k = 0; k < 6; ++k) {
        double hk = h * (1.0 + std::abs(z[k]));
        Vec6 zp = z, zm = z;
        zp[k] += hk;
        zm[k] -= hk;
        ActionAngle p{zp.head<3>(), zp.tail<3>(), aa.branch}, m{zm.head<3>(), zm.tail<3>(), aa.branch};
        df[k] = (f(p) - f(m)) / (zp[k] - zm[k]);
        dg[k] = (g(p) - g(m)) / (zp[k] - zm[k]);
    }
    double b = 0;
    for (int k = 0; k < 3; ++k) b += df[k] * dg[k + 3] - df[k + 3] * dg[k];
    return b;
}

BracketReport check_sic_table(const PhaseState& s, const Params& p, double h) {
    VectorObservable F = [&](const PhaseState& z) { return sic_vector(sic_of_state(z, p)); };
    BracketReport rep;
    fill_table(rep, phase_jacobian(F, s, h), sic_of_state(s, p), false, is_radial(s));
    return rep;
}

BracketReport check_past_sic_table(const PhaseState& s, const Params& p, double h) {
    VectorObservable F = [&](const PhaseState& z) {
        return sic_vector(past_coords(sic_of_state(z, p)));
    };
    BracketReport rep;
    fill_table(rep, phase_jacobian(F, s, h), past_coords(sic_of_state(s, p)), true, is_radial(s));
    return rep;
}

BracketReport check_action_angle_brackets(const PhaseState& s, const Params& p, double h) {
    VectorObservable F = [&](const PhaseState& z) {
        const ActionAngle aa = angle(z, p);
        Eigen::VectorXd out(6);
        out << aa.theta, aa.a;
        return out;
    };
    const Eigen::MatrixXd J = phase_jacobian(F, s, h);
    BracketReport rep;
    for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
            std::string jk = std::to_string(j + 1) + std::to_string(k + 1);
            Bracket b = bracket_rows(J, j, 3 + k);
            rep.add("{theta,a}" + jk, b.value, j == k ? 1.0 : 0.0, std::max(1.0, b.scale));
            if (j < k) {
                b = bracket_rows(J, j, k);
                rep.add("{theta,theta}" + jk, b.value, 0.0, std::max(1.0, b.scale));
                b = bracket_rows(J, 3 + j, 3 + k);
                rep.add("{a,a}" + jk, b.value, 0.0, std::max(1.0, b.scale));
            }
        }
    }
    rep.add("det-1", J.determinant(), 1.0, 1.0);
    return rep;
}

BracketReport check_xv_brackets(const PhaseState& s, double t, const Params& p, double h) {
    // rows: a, xi, lambda, X(3), V(3)
    VectorObservable F = [&](const PhaseState& z) {
        double a = std::sqrt(conserved(z, p).H);
        PhaseState w = kepler_propagate(z, t, p);
        Eigen::VectorXd out(9);
        out << a, p.q / a, z.x.cross(z.v).norm(), w.x, w.v;
        return out;
    };
    const Eigen::MatrixXd J = phase_jacobian(F, s, h);
    const double a = std::sqrt(conserved(s, p).H);
    const double xi = p.q / a;
    const PhaseState w = kepler_propagate(s, t, p);
    const Vec3 X = w.x, V = w.v;
    const double r3 = std::pow(X.norm(), 3);

    BracketReport rep;
    auto vec_rel = [&](const std::string& name, int row, int first, const Vec3& expected) {
        for (int k = 0; k < 3; ++k) {
            Bracket b = bracket_rows(J, row, first + k);
            double denom = std::max({expected.norm(), b.scale, 1e-300});
            rep.add(name + std::to_string(k + 1), b.value, expected[k], denom);
        }
    };
    vec_rel("{a,X}", 0, 3, -V / a);
    vec_rel("{xi,X}", 1, 3, (xi * xi / p.q) * V / a);
    vec_rel("{a,V}", 0, 6, -(xi / 2.0) * X / r3);
    vec_rel("{xi,V}", 1, 6, (xi * xi * xi / (2.0 * p.q)) * X / r3);
    if (!is_radial(s)) {
        Vec3 l = s.x.cross(s.v).normalized();
        vec_rel("{lambda,X}", 2, 3, -l.cross(X));
        vec_rel("{lambda,V}", 2, 6, -l.cross(V));
    }
    return rep;
}

double jacobi_residual(const ScalarField& f, const ScalarField& g, const ScalarField& k,
                       const PhaseState& s, double h) {
    const double ho = std::sqrt(h);
    auto inner = [h](const ScalarField& A, const ScalarField& B) {
        return ScalarField{[A, B, h](const PhaseState& z) { return pb_numeric(A, B, z, h); },
                           "{" + A.label + "," + B.label + "}"};
    };
    double t1 = pb_numeric(f, inner(g, k), s, ho);
    double t2 = pb_numeric(g, inner(k, f), s, ho);
    double t3 = pb_numeric(k, inner(f, g), s, ho);
    return std::abs(t1 + t2 + t3);
}

}  // namespace kaa
