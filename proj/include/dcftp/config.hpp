#pragma once

#include <cstdint>
#include <string>

#include "dcftp/network.hpp"
#include "dcftp/sampler.hpp"

namespace dcftp {

struct BatchConfig {
  std::size_t n = 1;
  std::uint64_t seed = 1;
  bool seed_given = false;
  int workers = 1;
};

struct RunConfig {
  NetworkSpec network;
  SamplerOptions sampler;
  BatchConfig batch;
};

/// Parses the key-value format (see README) or, when the text starts with
/// '{', JSON. Errors are Error(ConfigError) naming the line and field.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace dcftp
