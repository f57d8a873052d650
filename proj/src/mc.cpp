#include "exitbsde/mc.hpp"

namespace exitbsde {

int default_thread_count() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace exitbsde
