#include "srsi/ambulance.hpp"

#include <algorithm>
#include <cstddef>
#include <deque>
#include <functional>
#include <queue>
#include <stdexcept>

namespace srsi {

int manhattan_between(int id_a, int id_b, int grid_side) {
  const int a = id_a - 1;
  const int b = id_b - 1;
  const int dr = std::abs(a / grid_side - b / grid_side);
  const int dc = std::abs(a % grid_side - b % grid_side);
  return dr + dc;
}

namespace {

struct PendingCall {
  double arrival_hours;
  int location_id;
};

}  // namespace

double ambulance_replicate(const AmbulanceParams& params, int center_id,
                           std::span<const double> location_weights,
                           std::span<const int> location_ids, RandomStream& rng,
                           AmbulanceAudit* audit) {
  if (location_weights.size() != location_ids.size() || location_ids.empty())
    throw std::invalid_argument("ambulance_replicate: weight/location size mismatch");
  const int cells = params.grid_side * params.grid_side;
  if (center_id < 1 || center_id > cells)
    throw std::invalid_argument("ambulance_replicate: center off the grid");
  for (int id : location_ids)
    if (id < 1 || id > cells)
      throw std::invalid_argument("ambulance_replicate: call location off the grid");

  const double scale_hours = params.erlang_scale_minutes / 60.0;
  const double horizon = params.warmup_hours + params.window_hours;

  // Busy units are represented by their return-to-base times.
  std::priority_queue<double, std::vector<double>, std::greater<>> returns;
  int idle = params.ambulances;
  std::deque<PendingCall> waiting;

  AmbulanceAudit local;
  AmbulanceAudit& out = audit != nullptr ? *audit : local;
  out = AmbulanceAudit{};
  double last_queued_dispatch_arrival = -1.0;

  double response_sum_hours = 0.0;
  long responses = 0;

  // Sends one unit to the call, records the response if the pickup lands in
  // the measurement window, and schedules the unit's return.
  const auto dispatch = [&](const PendingCall& call, double now, bool from_queue) {
    if (from_queue) {
      if (call.arrival_hours < last_queued_dispatch_arrival) out.fcfs_respected = false;
      last_queued_dispatch_arrival = call.arrival_hours;
    }
    const int phase = 1 + manhattan_between(call.location_id, center_id, params.grid_side);
    const double outbound = rng.erlang(phase, scale_hours);
    const double inbound = rng.erlang(phase, scale_hours);
    const double pickup = now + outbound;
    if (pickup > params.warmup_hours && pickup <= horizon) {
      response_sum_hours += pickup - call.arrival_hours;
      ++responses;
    }
    --idle;
    returns.push(pickup + inbound);
  };

  const auto check_fleet = [&] {
    if (idle + static_cast<int>(returns.size()) != params.ambulances) out.fleet_conserved = false;
  };

  double next_arrival = rng.exponential(1.0 / params.calls_per_hour);
  int next_location =
      location_ids[rng.categorical(location_weights)];

  while (true) {
    const double next_return = returns.empty() ? horizon + 1.0 : returns.top();
    if (std::min(next_arrival, next_return) > horizon) break;
    if (next_arrival <= next_return) {
      const PendingCall call{next_arrival, next_location};
      if (idle > 0) {
        dispatch(call, call.arrival_hours, /*from_queue=*/false);
      } else {
        waiting.push_back(call);
      }
      next_arrival += rng.exponential(1.0 / params.calls_per_hour);
      next_location = location_ids[rng.categorical(location_weights)];
    } else {
      returns.pop();
      ++idle;
      if (!waiting.empty()) {
        const PendingCall call = waiting.front();
        waiting.pop_front();
        dispatch(call, next_return, /*from_queue=*/true);
      }
    }
    check_fleet();
  }

  out.picked_up = responses;
  if (responses == 0) return 0.0;
  return 60.0 * response_sum_hours / static_cast<double>(responses);
}

}  // namespace srsi
