#pragma once

#include <stdexcept>
#include <string>

namespace l2t {

/// Root of every error this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data problems: unreadable files, corpora that are empty or too short,
/// token ids outside the vocabulary, missing run metrics.
class DataError : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public DataError {
 public:
  using DataError::DataError;
};

class CorpusTooSmall : public DataError {
 public:
  using DataError::DataError;
};

class VocabError : public DataError {
 public:
  using DataError::DataError;
};

class ReportError : public DataError {
 public:
  using DataError::DataError;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class InvalidExperience : public Error {
 public:
  using Error::Error;
};

class EmptyBuffer : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace l2t
