#include "tsmt/model/config.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tsmt::model {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("model config: " + what);
}

void validate_stream(const StreamConfig& s, const std::string& name) {
  require(s.model_dim > 0 && s.head_dim > 0 && s.heads > 0, name + " dimensions must be positive");
  require(s.model_dim % 2 == 0, name + ".model_dim must be even for the positional encoding");
  require(s.attention_dim() >= s.model_dim,
          name + ": heads * head_dim (" + std::to_string(s.attention_dim()) + ") must be >= model_dim (" +
              std::to_string(s.model_dim) + ")");
}

}  // namespace

void TSMTConfig::validate() const {
  require(joints > 0, "joints must be positive");
  require(bins >= 2, "bins must be >= 2");
  require(embed_dim > 0, "embed_dim must be positive");
  validate_stream(pose, "pose");
  if (use_audio) {
    validate_stream(audio, "audio");
    require(audio_features > 0 && beat_embed_dim > 0, "audio feature widths must be positive");
    require(conv_kernel > 0, "conv_kernel must be positive");
  }
  require(ff_multiplier > 0, "ff_multiplier must be positive");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
  require(max_context > 0, "max_context must be positive");
  require(std::isfinite(learning_rate) && learning_rate > 0.0, "learning_rate must be positive");
  require(batch_size > 0, "batch_size must be positive");
  require(std::isfinite(decay_factor) && decay_factor > 0.0, "decay_factor must be positive");
}

}  // namespace tsmt::model
