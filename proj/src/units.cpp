#include "fastgate/error.hpp"

namespace fastgate {

const char* stage_name(Stage stage) {
    switch (stage) {
        case Stage::Config: return "config";
        case Stage::TrapModel: return "trap-model";
        case Stage::Schemes: return "schemes";
        case Stage::GlobalOpt: return "global-opt";
        case Stage::OdeDynamics: return "ode-dynamics";
        case Stage::LocalOpt: return "local-opt";
        case Stage::ErrorModel: return "error-model";
        case Stage::Io: return "io";
    }
    return "unknown";
}

}  // namespace fastgate
