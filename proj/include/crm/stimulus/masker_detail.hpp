#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "crm/stimulus/stimulus.hpp"

namespace crm::stimulus::detail {

using SourceLookup = std::function<const AudioBuffer&(const std::string&)>;

/// Segment choices depend only on source lengths, so the same plan can be
/// assembled from raw or voice-morphed copies of the sources.
std::vector<MaskerSegment> plan_masker_segments(std::span<const Sentence* const> eligible,
                                                std::size_t masker_samples, int sample_rate,
                                                Rng& rng);

AudioBuffer assemble_masker(std::span<const MaskerSegment> segments, const SourceLookup& source,
                            int sample_rate);

}  // namespace crm::stimulus::detail
