#include "ssf/screw.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "ssf/error.hpp"

namespace ssf {

ScrewParams default_fps() { return ScrewParams{}; }

void validate(const ScrewParams& s) {
  const double vals[] = {s.outer_d_mm, s.root_d_mm,    s.flex_root_d_mm, s.thread_h_mm,       s.thread_h_rigid_mm,
                         s.pitch_mm,   s.rigid_len_mm, s.flex_len_mm,    s.cannula_d_mm, s.min_bend_radius_mm};
  for (double v : vals) {
    if (!std::isfinite(v) || v <= 0.0) throw Error(ErrorCode::InvalidSpec, "screw dimensions must be positive");
  }
  if (s.thread_count <= 0) throw Error(ErrorCode::InvalidSpec, "thread_count must be positive");
  if (!(s.cannula_d_mm < s.flex_root_d_mm && s.flex_root_d_mm < s.root_d_mm && s.root_d_mm < s.outer_d_mm)) {
    throw Error(ErrorCode::InvalidSpec, "need cannula_d < flex_root_d < root_d < outer_d");
  }
  if (std::abs(s.outer_d_mm - (s.flex_root_d_mm + 2.0 * s.thread_h_mm)) > 1e-6 ||
      std::abs(s.outer_d_mm - (s.root_d_mm + 2.0 * s.thread_h_rigid_mm)) > 1e-6) {
    throw Error(ErrorCode::InvalidSpec, "thread crest must reach the outer diameter in both regions");
  }
}

ChordLimit rigid_chord_limit_detail(double R, double D, double d) {
  if (!std::isfinite(R) || !std::isfinite(D) || !std::isfinite(d)) {
    throw Error(ErrorCode::NonFinite, "chord limit arguments must be finite");
  }
  if (R <= D / 2.0) throw Error(ErrorCode::DegenerateTunnel, "tunnel radius must exceed half the bore");
  ChordLimit out;
  out.effective_d_mm = std::clamp(d, 0.0, D);
  out.clamped = out.effective_d_mm != d;
  const double outer = R + D / 2.0 - out.effective_d_mm / 2.0;
  const double inner = R - D / 2.0 + out.effective_d_mm / 2.0;
  const double radicand = outer * outer - inner * inner;
  out.length_mm = radicand > 0.0 ? 2.0 * std::sqrt(radicand) : 0.0;
  return out;
}

double rigid_chord_limit(double R, double D, double d) { return rigid_chord_limit_detail(R, D, d).length_mm; }

FeasibilityReport check_feasibility(const ScrewParams& screw, const TrajectoryPlan& plan, double bore) {
  validate(screw);
  validate(plan);
  if (!std::isfinite(bore) || bore <= 0.0) throw Error(ErrorCode::InvalidArgument, "tunnel bore must be positive");

  FeasibilityReport r;
  r.straight_fit_ok = screw.root_d_mm <= bore;
  if (!r.straight_fit_ok) {
    r.notes.push_back(fmt::format("thread root {:.3f} mm exceeds bore {:.3f} mm", screw.root_d_mm, bore));
  }
  if (screw.outer_d_mm > bore) {
    r.notes.push_back(fmt::format("threads exceed bore by {:.3f} mm and self-tap into bone", screw.outer_d_mm - bore));
  }

  if (plan.curved()) {
    const ChordLimit limit = rigid_chord_limit_detail(plan.radius_mm, bore, screw.root_d_mm);
    if (limit.clamped) {
      r.notes.push_back(fmt::format("rigid root clamped to bore ({:.3f} mm) for chord limit", limit.effective_d_mm));
    }
    const double overhang = std::max(0.0, screw.rigid_len_mm - plan.straight_len_mm);
    r.rigid_chord_max_mm = limit.length_mm;
    r.rigid_margin_mm = limit.length_mm - overhang;
    r.bend_radius_ok = plan.radius_mm >= screw.min_bend_radius_mm;
    r.notes.push_back(fmt::format("rigid overhang into curve {:.3f} mm vs chord limit {:.3f} mm", overhang,
                                  limit.length_mm));
    if (!r.bend_radius_ok) {
      r.notes.push_back(fmt::format("plan radius {:.3f} mm below minimum bend radius {:.3f} mm", plan.radius_mm,
                                    screw.min_bend_radius_mm));
    }
  } else {
    // A straight tunnel admits any rigid length.
    r.rigid_chord_max_mm = plan.total_length_mm();
    r.rigid_margin_mm = r.rigid_chord_max_mm;
    r.bend_radius_ok = true;
  }
  if (screw.total_len_mm() > plan.total_length_mm()) {
    r.notes.push_back(fmt::format("screw {:.3f} mm longer than tunnel {:.3f} mm", screw.total_len_mm(),
                                  plan.total_length_mm()));
  }
  r.feasible = r.rigid_margin_mm >= 0.0 && r.bend_radius_ok && r.straight_fit_ok;
  return r;
}

// ---------------------------------------------------------------- STL

namespace {

struct StlWriter {
  std::ostream& out;
  std::size_t facets = 0;

  void tri(const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 n = (b - a).cross(c - a);
    const double len = n.norm();
    if (len <= 0.0) return;
    n /= len;
    out << fmt::format("  facet normal {:.6e} {:.6e} {:.6e}\n    outer loop\n", n.x(), n.y(), n.z());
    for (const Vec3* v : {&a, &b, &c}) {
      out << fmt::format("      vertex {:.6e} {:.6e} {:.6e}\n", v->x(), v->y(), v->z());
    }
    out << "    endloop\n  endfacet\n";
    ++facets;
  }
  void quad(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    tri(a, b, c);
    tri(a, c, d);
  }
};

int segments_for(double radius, double tol) {
  // Chord sagitta r (1 - cos(pi / n)) <= tol.
  const double c = std::clamp(1.0 - tol / radius, -1.0, 1.0);
  return std::max(8, static_cast<int>(std::ceil(kPi / std::acos(c))));
}

Vec3 ring(double r, double phi, double z) { return {r * std::cos(phi), r * std::sin(phi), z}; }

// Tube between inner and outer radius over [z0, z1], with annular end caps.
void tube(StlWriter& w, double r_in, double r_out, double z0, double z1, double tol) {
  const int n = segments_for(r_out, tol);
  for (int i = 0; i < n; ++i) {
    const double a0 = 2.0 * kPi * i / n;
    const double a1 = 2.0 * kPi * (i + 1) / n;
    w.quad(ring(r_out, a0, z0), ring(r_out, a1, z0), ring(r_out, a1, z1), ring(r_out, a0, z1));
    w.quad(ring(r_in, a0, z1), ring(r_in, a1, z1), ring(r_in, a1, z0), ring(r_in, a0, z0));
    w.quad(ring(r_in, a0, z0), ring(r_in, a1, z0), ring(r_out, a1, z0), ring(r_out, a0, z0));
    w.quad(ring(r_out, a0, z1), ring(r_out, a1, z1), ring(r_in, a1, z1), ring(r_in, a0, z1));
  }
}

// Helical ribbon from the root radius out to the crest, one face per side.
void thread_ribbon(StlWriter& w, double r_root, double r_crest, double pitch, double z0, double z1, double tol) {
  const int per_turn = segments_for(r_crest, tol);
  const double turns = (z1 - z0) / pitch;
  const int n = std::max(1, static_cast<int>(std::ceil(turns * per_turn)));
  const double dphi = 2.0 * kPi * turns / n;
  for (int i = 0; i < n; ++i) {
    const double p0 = i * dphi;
    const double p1 = (i + 1) * dphi;
    const double za = z0 + pitch * p0 / (2.0 * kPi);
    const double zb = z0 + pitch * p1 / (2.0 * kPi);
    w.quad(ring(r_root, p0, za), ring(r_root, p1, zb), ring(r_crest, p1, zb), ring(r_crest, p0, za));
  }
}

}  // namespace

std::size_t write_screw_stl(const ScrewParams& s, std::ostream& out, double tol) {
  validate(s);
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tessellation tolerance must be positive");
  StlWriter w{out};
  out << "solid fps\n";
  const double rc = s.cannula_d_mm / 2.0;
  // Rigid region near the head (z in [0, L_R]), flexible region after it.
  // The flexible cut pattern is not modeled; it is a plain cylinder.
  tube(w, rc, s.root_d_mm / 2.0, 0.0, s.rigid_len_mm, tol);
  tube(w, rc, s.flex_root_d_mm / 2.0, s.rigid_len_mm, s.total_len_mm(), tol);
  thread_ribbon(w, s.root_d_mm / 2.0, s.root_d_mm / 2.0 + s.thread_h_rigid_mm, s.pitch_mm, 0.0, s.rigid_len_mm, tol);
  thread_ribbon(w, s.flex_root_d_mm / 2.0, s.flex_root_d_mm / 2.0 + s.thread_h_mm, s.pitch_mm, s.rigid_len_mm,
                s.total_len_mm(), tol);
  out << "endsolid fps\n";
  return w.facets;
}

}  // namespace ssf
