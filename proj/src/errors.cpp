#include "dlme/errors.hpp"

namespace dlme {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::Solver: return "solver";
        case ErrorKind::Infeasible: return "infeasible";
        case ErrorKind::Numerical: return "numerical";
        case ErrorKind::Usage: return "usage";
    }
    return "unknown";
}

}  // namespace dlme
