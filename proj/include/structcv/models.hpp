#pragma once

#include <memory>
#include <string>

#include "structcv/models/crf.hpp"
#include "structcv/models/event.hpp"
#include "structcv/models/gaussian_mean.hpp"
#include "structcv/models/hmm.hpp"
#include "structcv/models/spatial.hpp"

namespace structcv {

struct ModelConfig {
  std::string family = "hmm";  // hmm | event | spatial | crf | gaussian-mean
  HmmConfig hmm;
  EventConfig event;
  SpatialConfig spatial;
  CrfConfig crf;
  GaussianMeanConfig gaussian_mean;
};

std::unique_ptr<Model> make_model(const ModelConfig& config);

}  // namespace structcv
