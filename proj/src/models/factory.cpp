#include "structcv/models.hpp"

namespace structcv {

std::unique_ptr<Model> make_model(const ModelConfig& config) {
  if (config.family == "hmm") return std::make_unique<HmmModel>(config.hmm);
  if (config.family == "event") return std::make_unique<EventModel>(config.event);
  if (config.family == "spatial") return std::make_unique<SpatialModel>(config.spatial);
  if (config.family == "crf") return std::make_unique<CrfModel>(config.crf);
  if (config.family == "gaussian-mean") return std::make_unique<GaussianMeanModel>(config.gaussian_mean);
  throw ArgumentError("unknown model family '" + config.family +
                      "' (expected hmm, event, spatial, crf or gaussian-mean)");
}

}  // namespace structcv
