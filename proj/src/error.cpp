#include "ez/error.hpp"

namespace ez {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DuplicateKey: return "DuplicateKey";
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::MissingManifest: return "MissingManifest";
    case ErrorKind::ValidationFailure: return "ValidationFailure";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::IndexError: return "IndexError";
    case ErrorKind::ExtractionError: return "ExtractionError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::UnsupportedShape: return "UnsupportedShape";
    case ErrorKind::EmptyStats: return "EmptyStats";
    case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::IncompatibleCheckpoint: return "IncompatibleCheckpoint";
    case ErrorKind::NoTargetsMatched: return "NoTargetsMatched";
    case ErrorKind::NotAdapted: return "NotAdapted";
    case ErrorKind::BadFactor: return "BadFactor";
    case ErrorKind::LabelError: return "LabelError";
    case ErrorKind::UnknownModel: return "UnknownModel";
    case ErrorKind::MalformedRegistry: return "MalformedRegistry";
    case ErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::DownloadError: return "DownloadError";
    case ErrorKind::CorruptArchive: return "CorruptArchive";
    case ErrorKind::BadConfig: return "BadConfig";
  }
  return "UnknownError";
}

}  // namespace ez
