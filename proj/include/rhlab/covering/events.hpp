#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>

#include "rhlab/covering/enclosure.hpp"

namespace rhlab {

/// Circle ball stored by center and radius; |I| = 2 * radius.
struct Ball {
  double center = 0.0;
  double radius = 0.0;

  double lo() const { return center - radius; }
  double hi() const { return center + radius; }
  double diameter() const { return 2.0 * radius; }
  Arc inner() const { return ball_arc(center, radius, false); }
  Arc outer() const { return ball_arc(center, radius, true); }
};

struct CoveringEvent {
  std::size_t step = 0;
  Arc sub;                 // exact fixed-point sub-arc of I
  int depth = 0;           // bisection depth of the sub-arc
  std::uint64_t index = 0; // position among the 2^depth arcs at that depth
  double min_crit_dist = kInf;
  Ball target;

  double center() const { return fixed_to_double(sub.lo) + 0.5 * fixed_to_double(sub.len); }
  double radius() const { return 0.5 * fixed_to_double(sub.len); }
};

struct CoveringSearch {
  int max_depth = 20;
  std::size_t node_cap = std::size_t{1} << 15;
  std::size_t arc_cap = kDefaultArcCap;
};

namespace detail {

enum class NodeOutcome { covered, too_close, exhausted };

struct NodeResult {
  NodeOutcome outcome = NodeOutcome::exhausted;
  std::size_t step = 0;
  double min_dist = kInf;
};

// Push one exact arc forward until it covers J, comes within iota of C, or
// runs out of steps.
inline NodeResult run_node(const MapModel& m, const NoiseStream& noise, const Arc& sub, const Arc& target,
                           std::size_t limit, double iota, std::size_t arc_cap) {
  NodeResult r;
  Enclosure e;
  e.inner = {sub};
  e.outer = {sub};
  r.min_dist = e.min_crit_distance(m);
  if (!(r.min_dist > iota)) {
    r.outcome = NodeOutcome::too_close;
    return r;
  }
  for (std::size_t j = 1; j <= limit; ++j) {
    e = step_enclosure(m, e, noise.at(j - 1), arc_cap);
    r.min_dist = std::min(r.min_dist, e.min_crit_distance(m));
    r.step = j;
    if (!(r.min_dist > iota)) {
      r.outcome = NodeOutcome::too_close;
      return r;
    }
    for (const Arc& a : e.inner) {
      if (a.covers(target)) {
        r.outcome = NodeOutcome::covered;
        return r;
      }
    }
  }
  r.outcome = NodeOutcome::exhausted;
  return r;
}

}  // namespace detail

/// First certified event of E_J(I, N, iota): the least step i <= N at which
/// some dyadic sub-arc of I has an inner image containing J while its outer
/// images stayed farther than iota from C. Ties go to the shallower, then the
/// leftmost, sub-arc.
inline std::optional<CoveringEvent> detect_covering(const MapModel& m, const NoiseStream& noise, const Ball& I,
                                                    const Ball& J, std::size_t N, double iota,
                                                    const CoveringSearch& cfg = {}) {
  require(I.radius > 0.0 && J.radius > 0.0, ErrorCode::config, "covering needs balls of positive size");
  require(iota >= 0.0, ErrorCode::config, "iota must be non-negative");
  if (N == 0) return std::nullopt;
  const Arc target = J.outer();
  struct Node {
    Arc arc;
    int depth;
    std::uint64_t index;
  };
  std::deque<Node> queue;
  queue.push_back({I.inner(), 0, 0});
  std::optional<CoveringEvent> best;
  std::size_t visited = 0;
  while (!queue.empty() && visited < cfg.node_cap) {
    Node nd = queue.front();
    queue.pop_front();
    ++visited;
    std::size_t limit = best ? best->step - 1 : N;
    if (limit == 0) break;
    auto r = detail::run_node(m, noise, nd.arc, target, limit, iota, cfg.arc_cap);
    if (r.outcome == detail::NodeOutcome::covered) {
      CoveringEvent ev;
      ev.step = r.step;
      ev.sub = nd.arc;
      ev.depth = nd.depth;
      ev.index = nd.index;
      ev.min_crit_dist = r.min_dist;
      ev.target = J;
      best = ev;
    } else if (r.outcome == detail::NodeOutcome::too_close && nd.depth < cfg.max_depth && nd.arc.len >= 2) {
      Fixed h = nd.arc.len / 2;
      queue.push_back({Arc{nd.arc.lo, h, false}, nd.depth + 1, 2 * nd.index});
      queue.push_back({Arc{nd.arc.lo + h, nd.arc.len - h, false}, nd.depth + 1, 2 * nd.index + 1});
    }
  }
  return best;
}

/// Re-run the certificate of an event from its stored sub-arc.
inline bool verify_covering(const MapModel& m, const NoiseStream& noise, const CoveringEvent& ev, double iota,
                            std::size_t arc_cap = kDefaultArcCap) {
  if (ev.step == 0) return false;
  auto r = detail::run_node(m, noise, ev.sub, ev.target.outer(), ev.step, iota, arc_cap);
  return r.outcome == detail::NodeOutcome::covered && r.step <= ev.step;
}

/// One JSON line {"replica":..,"step":..,"sub_ball":{..},"min_crit_dist":..}.
inline std::string covering_json_line(std::uint64_t replica, const CoveringEvent& ev) {
  std::string s = "{\"replica\":" + std::to_string(replica) + ",\"step\":" + std::to_string(ev.step) +
                  ",\"sub_ball\":{\"center\":" + fmt(ev.center()) + ",\"radius\":" + fmt(ev.radius()) +
                  ",\"depth\":" + std::to_string(ev.depth) + "},\"min_crit_dist\":" +
                  (std::isinf(ev.min_crit_dist) ? std::string("null") : fmt(ev.min_crit_dist)) + "}";
  return s;
}

}  // namespace rhlab
