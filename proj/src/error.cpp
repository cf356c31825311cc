#include "ivtrial/error.hpp"

namespace ivtrial {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::Separation: return "Separation";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::ColumnMismatch: return "ColumnMismatch";
    case ErrorKind::UnknownNode: return "UnknownNode";
    case ErrorKind::InvalidGraph: return "InvalidGraph";
    case ErrorKind::InvalidDesign: return "InvalidDesign";
    case ErrorKind::EmptyArm: return "EmptyArm";
    case ErrorKind::EmptyStratum: return "EmptyStratum";
    case ErrorKind::NegativeComplierFraction: return "NegativeComplierFraction";
    case ErrorKind::WeakInstrument: return "WeakInstrument";
    case ErrorKind::WeakInteraction: return "WeakInteraction";
    case ErrorKind::AdherenceOrderViolated: return "AdherenceOrderViolated";
    case ErrorKind::InvalidParam: return "InvalidParam";
    case ErrorKind::TooManyResampleFailures: return "TooManyResampleFailures";
    case ErrorKind::UnknownEstimator: return "UnknownEstimator";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace ivtrial
