#include "ssf/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "ssf/error.hpp"

namespace ssf {

void validate(const PhantomSpec& s) {
  const double vals[] = {s.voxel_mm,           s.body_extent_mm.x(), s.body_extent_mm.y(), s.body_extent_mm.z(),
                         s.shell_thickness_mm, s.channel_d_mm,       s.insert_pcf,         s.pedicle_len_mm,
                         s.body_depth_mm};
  for (double v : vals) {
    if (!std::isfinite(v) || v <= 0.0) throw Error(ErrorCode::InvalidSpec, "phantom dimensions must be positive");
  }
  if (!(s.margin_mm >= 0.0)) throw Error(ErrorCode::InvalidSpec, "margin must be non-negative");
  if (s.voxel_mm > s.channel_d_mm / 10.0) {
    throw Error(ErrorCode::VoxelTooCoarse, "voxel pitch must be at most channel_d / 10");
  }
  const Vec3& e = s.body_extent_mm;
  if (2.0 * s.shell_thickness_mm >= std::min(e.y(), e.z()) || s.shell_thickness_mm >= e.x()) {
    throw Error(ErrorCode::InvalidSpec, "shell thicker than the body");
  }
  if (s.channel_d_mm / 2.0 + s.shell_thickness_mm > std::min(e.y(), e.z()) / 2.0) {
    throw Error(ErrorCode::InvalidSpec, "pedicle wider than the body");
  }
}

VoxelPhantom build_phantom(const PhantomSpec& spec) { return VoxelPhantom(spec); }

Tissue VoxelPhantom::classify(const Vec3& p) const {
  const auto& s = spec_;
  const double lp = s.pedicle_len_mm;
  const double t = s.shell_thickness_mm;
  const double rc = s.channel_d_mm / 2.0;
  const Vec3 half = s.body_extent_mm / 2.0;

  if (p.x() <= lp && p.y() * p.y() + p.z() * p.z() < rc * rc) return Tissue::Void;

  const bool in_insert = p.x() > lp && p.x() < lp + s.body_extent_mm.x() - t && std::abs(p.y()) < half.y() - t &&
                         std::abs(p.z()) < half.z() - t;
  if (in_insert) return Tissue::Insert;

  const bool in_body = p.x() >= lp - t && p.x() <= lp + s.body_extent_mm.x() && std::abs(p.y()) <= half.y() &&
                       std::abs(p.z()) <= half.z();
  const double ped_half = rc + t;
  const bool in_pedicle = p.x() >= 0.0 && p.x() <= lp && std::abs(p.y()) <= ped_half && std::abs(p.z()) <= ped_half;
  return (in_body || in_pedicle) ? Tissue::Shell : Tissue::Void;
}

VoxelPhantom::VoxelPhantom(const PhantomSpec& spec) : spec_(spec) {
  validate(spec_);
  const double m = spec_.margin_mm;
  const double ped_half = spec_.channel_d_mm / 2.0 + spec_.shell_thickness_mm;
  const Vec3 lo(-m, -(std::max(spec_.body_extent_mm.y() / 2.0, ped_half) + m),
                -(std::max(spec_.body_extent_mm.z() / 2.0, ped_half) + m));
  const Vec3 hi(spec_.pedicle_len_mm + spec_.body_extent_mm.x() + m, -lo.y(), -lo.z());
  origin_ = lo;
  for (int a = 0; a < 3; ++a) dims_[a] = static_cast<int>(std::ceil((hi[a] - lo[a]) / spec_.voxel_mm));

  tissue_.assign(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2], 0);
  removed_.assign(tissue_.size(), 0);
  for (int k = 0; k < dims_[2]; ++k) {
    for (int j = 0; j < dims_[1]; ++j) {
      for (int i = 0; i < dims_[0]; ++i) {
        const VoxelIndex v{i, j, k};
        tissue_[linear(v)] = static_cast<std::uint8_t>(classify(center(v)));
      }
    }
  }
}

bool VoxelPhantom::in_bounds(const VoxelIndex& v) const {
  return v.i >= 0 && v.j >= 0 && v.k >= 0 && v.i < dims_[0] && v.j < dims_[1] && v.k < dims_[2];
}

Vec3 VoxelPhantom::center(const VoxelIndex& v) const {
  return origin_ + spec_.voxel_mm * Vec3(v.i + 0.5, v.j + 0.5, v.k + 0.5);
}

VoxelIndex VoxelPhantom::locate(const Vec3& p) const {
  const Vec3 q = (p - origin_) / spec_.voxel_mm;
  return {static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())),
          static_cast<int>(std::floor(q.z()))};
}

double VoxelPhantom::density_pcf(const VoxelIndex& v) const {
  return tissue(v) == Tissue::Insert ? spec_.insert_pcf : 0.0;
}

std::size_t VoxelPhantom::carve_sphere(const Vec3& c, double radius, std::vector<std::uint8_t>* swept) {
  const double h = spec_.voxel_mm;
  const Vec3 q = (c - origin_) / h;
  const double rv = radius / h;
  const double r2 = radius * radius;
  int lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max(0, static_cast<int>(std::floor(q[a] - rv - 0.5)));
    hi[a] = std::min(dims_[a] - 1, static_cast<int>(std::ceil(q[a] + rv - 0.5)));
  }
  std::size_t fresh = 0;
  for (int k = lo[2]; k <= hi[2]; ++k) {
    const double dz = origin_.z() + (k + 0.5) * h - c.z();
    for (int j = lo[1]; j <= hi[1]; ++j) {
      const double dy = origin_.y() + (j + 0.5) * h - c.y();
      const double ryz = dz * dz + dy * dy;
      if (ryz > r2) continue;
      for (int i = lo[0]; i <= hi[0]; ++i) {
        const double dx = origin_.x() + (i + 0.5) * h - c.x();
        if (ryz + dx * dx > r2) continue;
        const std::size_t idx = (static_cast<std::size_t>(k) * dims_[1] + j) * dims_[0] + i;
        if (swept) (*swept)[idx] = 1;
        if (tissue_[idx] != 0 && removed_[idx] == 0) {
          removed_[idx] = 1;
          ++fresh;
        }
      }
    }
  }
  removed_count_ += fresh;
  return fresh;
}

void VoxelPhantom::clear_removed() {
  std::fill(removed_.begin(), removed_.end(), 0);
  removed_count_ = 0;
}

double VoxelPhantom::channel_axis_distance(const Vec3& p) const { return std::hypot(p.y(), p.z()); }

namespace {

// Grid of points on the rectangle origin + u*a + v*b, u in [0,1], v in [0,1].
void sample_rect(PointCloud& out, const Vec3& origin, const Vec3& a, const Vec3& b, double spacing,
                 const auto& keep) {
  const int nu = std::max(1, static_cast<int>(std::ceil(a.norm() / spacing)));
  const int nv = std::max(1, static_cast<int>(std::ceil(b.norm() / spacing)));
  for (int iu = 0; iu <= nu; ++iu) {
    for (int iv = 0; iv <= nv; ++iv) {
      const Vec3 p = origin + (static_cast<double>(iu) / nu) * a + (static_cast<double>(iv) / nv) * b;
      if (keep(p)) out.push_back(p);
    }
  }
}

}  // namespace

PointCloud VoxelPhantom::surface_cloud(double spacing) const {
  if (!(spacing > 0.0)) throw Error(ErrorCode::InvalidArgument, "surface spacing must be positive");
  const auto& s = spec_;
  const double lp = s.pedicle_len_mm;
  const double t = s.shell_thickness_mm;
  const double rc = s.channel_d_mm / 2.0;
  const double ph = rc + t;
  const Vec3 e = s.body_extent_mm;
  const double x0 = lp - t;
  const double x1 = lp + e.x();
  const auto all = [](const Vec3&) { return true; };
  // Proximal body face is hidden where the pedicle attaches.
  const auto outside_pedicle = [ph](const Vec3& p) { return std::abs(p.y()) > ph || std::abs(p.z()) > ph; };
  const auto outside_channel = [rc](const Vec3& p) { return p.y() * p.y() + p.z() * p.z() >= rc * rc; };

  PointCloud out;
  const Vec3 c000(x0, -e.y() / 2, -e.z() / 2);
  sample_rect(out, c000, Vec3(0, e.y(), 0), Vec3(0, 0, e.z()), spacing, outside_pedicle);
  sample_rect(out, Vec3(x1, -e.y() / 2, -e.z() / 2), Vec3(0, e.y(), 0), Vec3(0, 0, e.z()), spacing, all);
  sample_rect(out, c000, Vec3(x1 - x0, 0, 0), Vec3(0, 0, e.z()), spacing, all);
  sample_rect(out, Vec3(x0, e.y() / 2, -e.z() / 2), Vec3(x1 - x0, 0, 0), Vec3(0, 0, e.z()), spacing, all);
  sample_rect(out, c000, Vec3(x1 - x0, 0, 0), Vec3(0, e.y(), 0), spacing, all);
  sample_rect(out, Vec3(x0, -e.y() / 2, e.z() / 2), Vec3(x1 - x0, 0, 0), Vec3(0, e.y(), 0), spacing, all);

  // Pedicle prism: front face around the channel mouth and the four sides.
  sample_rect(out, Vec3(0, -ph, -ph), Vec3(0, 2 * ph, 0), Vec3(0, 0, 2 * ph), spacing, outside_channel);
  // The row at x0 is where the pedicle joins the body face, so it is skipped.
  const Vec3 len(x0, 0, 0);
  const auto before_body = [x0](const Vec3& p) { return p.x() < x0 - 1e-9; };
  sample_rect(out, Vec3(0, -ph, -ph), len, Vec3(0, 0, 2 * ph), spacing, before_body);
  sample_rect(out, Vec3(0, ph, -ph), len, Vec3(0, 0, 2 * ph), spacing, before_body);
  sample_rect(out, Vec3(0, -ph, -ph), len, Vec3(0, 2 * ph, 0), spacing, before_body);
  sample_rect(out, Vec3(0, -ph, ph), len, Vec3(0, 2 * ph, 0), spacing, before_body);

  // Channel wall.
  const int na = std::max(8, static_cast<int>(std::ceil(2.0 * kPi * rc / spacing)));
  const int nx = std::max(1, static_cast<int>(std::ceil(lp / spacing)));
  for (int ix = 0; ix <= nx; ++ix) {
    const double x = lp * ix / nx;
    for (int ia = 0; ia < na; ++ia) {
      const double a = 2.0 * kPi * ia / na;
      out.emplace_back(x, rc * std::cos(a), rc * std::sin(a));
    }
  }
  return out;
}

}  // namespace ssf
