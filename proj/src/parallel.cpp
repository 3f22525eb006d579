#include "fthresh/parallel.hpp"

#include <cstdlib>
#include <string>

namespace fthresh {

int default_threads() {
    if (const char* env = std::getenv("FTHRESH_THREADS")) {
        try {
            const int value = std::stoi(env);
            if (value > 0) {
                return value;
            }
        } catch (...) {
            // fall through to hardware concurrency
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}
