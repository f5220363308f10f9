#pragma once

#include <stdexcept>
#include <string>

namespace uda4sr {

// Base of every error the library raises on bad input or failed invariants.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FileNotFound : public Error {
 public:
  explicit FileNotFound(const std::string& path) : Error("file not found: " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class MalformedLine : public Error {
 public:
  MalformedLine(std::size_t line_no, const std::string& why)
      : Error("malformed line " + std::to_string(line_no) + ": " + why), line_no_(line_no) {}
  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

class EmptyAfterFilter : public Error {
 public:
  EmptyAfterFilter() : Error("no interactions survive the minimum-support filter") {}
};

class SeedNotInGraph : public Error {
 public:
  explicit SeedNotInGraph(int item)
      : Error("seed item not in graph: " + std::to_string(item)), item_(item) {}
  int item() const { return item_; }

 private:
  int item_;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class BatchTooSmall : public Error {
 public:
  explicit BatchTooSmall(std::size_t b)
      : Error("contrastive batch needs at least 2 rows, got " + std::to_string(b)) {}
};

class BadLength : public Error {
 public:
  using Error::Error;
};

class InvalidDistribution : public Error {
 public:
  using Error::Error;
};

class SequenceTooLong : public Error {
 public:
  SequenceTooLong(std::size_t len, std::size_t cap)
      : Error("sequence length " + std::to_string(len) + " exceeds t_max " + std::to_string(cap)) {}
};

class AllMasked : public Error {
 public:
  AllMasked() : Error("capsule routing needs at least one valid position") {}
};

class CatalogExhausted : public Error {
 public:
  CatalogExhausted(std::size_t eligible, std::size_t wanted)
      : Error("only " + std::to_string(eligible) + " eligible negatives, need " + std::to_string(wanted)) {}
};

class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(int epoch, std::size_t batch_id)
      : Error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_id)),
        batch_id_(batch_id) {}
  std::size_t batch_id() const { return batch_id_; }

 private:
  std::size_t batch_id_;
};

class MissingArtifact : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace uda4sr
