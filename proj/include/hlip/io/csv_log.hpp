#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "hlip/sim/scenario.hpp"

namespace hlip::io {

inline constexpr const char* kTrajectoryHeader =
    "time,phase,stance,com_x,com_y,com_z,vel_x,vel_y,vel_z,swing_x,swing_y,swing_z,u_des_x,u_des_y,"
    "hlip_p_x,hlip_v_x,hlip_p_y,hlip_v_y,e_p_x,e_v_x,e_p_y,e_v_y,clamped,push_active,impact,fell";

inline void write_trajectory(std::ostream& out, const std::vector<sim::TrajectoryRow>& rows) {
  out << kTrajectoryHeader << '\n';
  char buf[64];
  const auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, ",%.12g", x);
    out << buf;
  };
  for (const sim::TrajectoryRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.12g", r.time);
    out << buf << ',' << to_string(r.phase) << ',' << to_string(r.stance);
    for (int i = 0; i < 3; ++i) num(r.com_pos(i));
    for (int i = 0; i < 3; ++i) num(r.com_vel(i));
    for (int i = 0; i < 3; ++i) num(r.swing(i));
    num(r.u_des.x());
    num(r.u_des.y());
    for (int axis = 0; axis < 2; ++axis) {
      num(r.hlip[axis].p);
      num(r.hlip[axis].v);
    }
    for (int axis = 0; axis < 2; ++axis) {
      num(r.error[axis].x());
      num(r.error[axis].y());
    }
    out << ',' << int(r.clamped) << ',' << int(r.push_active) << ',' << int(r.impact) << ',' << int(r.fell) << '\n';
  }
}

}  // namespace hlip::io
