#ifndef GMLAB_CONFIG_HPP
#define GMLAB_CONFIG_HPP

#include "gmlab/analytic.hpp"
#include "gmlab/common.hpp"
#include "gmlab/data.hpp"
#include "gmlab/sampler.hpp"
#include "gmlab/schedule.hpp"
#include "gmlab/train.hpp"

#include <json.hpp>

#include <initializer_list>
#include <string>
#include <vector>

namespace gmlab {

using Json = nlohmann::json;

// Unknown keys are configuration errors everywhere; every parser calls this.
void check_keys(const Json& obj, std::initializer_list<const char*> allowed,
                const std::string& where);

NoiseSchedule parse_schedule(const Json& section);
GaussianMixture parse_mixture(const Json& section);
DatasetSpec parse_dataset(const Json& section, std::uint64_t default_seed);
SamplerConfig parse_sampler(const Json& section, std::uint64_t seed);
TrainConfig parse_train(const Json& section, std::uint64_t seed);

std::vector<double> parse_time_grid(const Json& section, const std::string& where);

Json load_config_file(const std::string& path);

}  // namespace gmlab

#endif
