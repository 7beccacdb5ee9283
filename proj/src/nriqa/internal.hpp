#pragma once

#include "sim2real/image.hpp"

namespace sim2real::nriqa {

struct MscnResult {
  ImageBuffer mscn;
  ImageBuffer sigma;  // local deviation map, used for tile sharpness
};

MscnResult MscnWithSigma(const ImageBuffer& luma);

}  // namespace sim2real::nriqa
