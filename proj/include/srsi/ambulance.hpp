#pragma once

#include <span>
#include <vector>

#include "srsi/rng.hpp"

namespace srsi {

// Square-grid emergency response system: a fleet stationed at one
// neighborhood serves Poisson calls whose locations follow a weight vector
// over observed neighborhoods. Travel times are Erlang with phase
// 1 + Manhattan distance between neighborhoods. Internally hours; the
// replication output is the mean response time in minutes of patients picked
// up inside the measurement window.
struct AmbulanceParams {
  int grid_side = 6;
  int ambulances = 8;
  double calls_per_hour = 1.0;
  double erlang_scale_minutes = 7.2;
  double warmup_hours = 1000.0;
  double window_hours = 50.0;
};

// Per-replication structural diagnostics.
struct AmbulanceAudit {
  bool fleet_conserved = true;   // idle + busy == ambulances at every event
  bool fcfs_respected = true;    // queued calls dispatched in arrival order
  long picked_up = 0;
};

// Neighborhood ids are 1-based, row-major on the grid.
int manhattan_between(int id_a, int id_b, int grid_side);

double ambulance_replicate(const AmbulanceParams& params, int center_id,
                           std::span<const double> location_weights,
                           std::span<const int> location_ids, RandomStream& rng,
                           AmbulanceAudit* audit = nullptr);

}  // namespace srsi
