#include "ctrank/log.hpp"

#include <cstdlib>

#include <spdlog/sinks/stdout_sinks.h>

namespace ctrank {

spdlog::logger& logger() {
    static std::shared_ptr<spdlog::logger> instance = [] {
        auto lg = std::make_shared<spdlog::logger>("ctrank", std::make_shared<spdlog::sinks::stderr_sink_mt>());
        lg->set_pattern("[%H:%M:%S.%e] [%l] %v");
        lg->set_level(spdlog::level::info);
        if (const char* env = std::getenv("CTRANK_LOG_LEVEL")) {
            lg->set_level(spdlog::level::from_str(env));
        }
        return lg;
    }();
    return *instance;
}

}  // namespace ctrank
