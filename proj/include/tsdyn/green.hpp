#pragma once

#include <cstddef>
#include <span>

#include "tsdyn/calculus.hpp"
#include "tsdyn/timescale.hpp"

namespace tsdyn {

/// Green's function of -x^ΔΔ = 0, x(a) = x(σ²(b)) = 0:
///
///   G(t,s) = (t - a)(σ²(b) - σ(s)) / (σ²(b) - a)   if t <= σ(s)
///          = (σ(s) - a)(σ²(b) - t) / (σ²(b) - a)   if σ(s) <= t
///
/// t_idx ranges over [0, N], s_idx over [0, N-1].
double green_value(const TimeScale& ts, std::size_t t_idx, std::size_t s_idx);

/// Affine interpolant with phi(a) = A, phi(σ²(b)) = B.
GridFunction phi(const TimeScale& ts, std::span<const double> A,
                 std::span<const double> B);

/// e(t) = (t - a)(σ²(b) - t) / (σ²(b) - a), scalar, full support.
GridFunction e_weight(const TimeScale& ts);

/// u(t_j) = Σ_{k=0}^{N-2} μ(p_k) G(t_j, p_k) h_k, so that -u^ΔΔ = h at every
/// equation point and u vanishes at a and σ²(b). h must cover 0..N-2.
///
/// Rows are distributed across OpenMP threads; each row is summed left to
/// right, so the result is bit-identical to green_apply_serial.
GridFunction green_apply(const TimeScale& ts, const GridFunction& h);

/// Single-threaded reference for green_apply.
GridFunction green_apply_serial(const TimeScale& ts, const GridFunction& h);

/// max |delta_second(u) + h| over equation points and components.
double green_identity_defect(const GridFunction& u, const GridFunction& h);

}  // namespace tsdyn
