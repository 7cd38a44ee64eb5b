#include "dinnlab/error.hpp"

namespace dinnlab {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::UnknownName: return "unknown-name";
    case ErrorKind::NonFiniteInput: return "non-finite-input";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::IntegrationFailure: return "integration-failure";
    case ErrorKind::BlowUp: return "blow-up";
    case ErrorKind::NumericFailure: return "numeric-failure";
    case ErrorKind::Ingestion: return "ingestion";
    case ErrorKind::Ordering: return "ordering";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::BadStart: return "bad-start";
    case ErrorKind::Stall: return "stall";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

} // namespace dinnlab
