#pragma once

#include <signal.h>

#include <functional>
#include <iostream>

#include "netadmin/error.hpp"
#include "netadmin/lab.hpp"

namespace tools {

// Blocks SIGINT/SIGTERM for every thread started afterwards.
inline sigset_t block_stop_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

inline void wait_for_stop(const sigset_t& set) {
  int sig = 0;
  sigwait(&set, &sig);
}

// Runs `body`, mapping errors to the exit codes the lab orchestrator knows.
inline int guarded(const char* name, const std::function<int()>& body) {
  try {
    return body();
  } catch (const netadmin::Error& e) {
    std::cerr << name << ": " << netadmin::to_string(e.kind()) << ": " << e.what() << '\n';
    if (e.kind() == netadmin::ErrorKind::PortInUse) return netadmin::lab::kExitPortInUse;
    return netadmin::lab::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << name << ": " << e.what() << '\n';
    return 1;
  }
}

}  // namespace tools
