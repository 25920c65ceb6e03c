// Copyright 2026 The tsenas Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tsenas/search_space.hpp"

namespace tsenas {

namespace {

// Stand-in topologies for the eight published cells. The engine never
// depends on these specifics; edit data/cell_library.json to swap them.
CellLibrary build_default_library() {
  using T = OpType;
  std::vector<OperationDescriptor> ops = {
      {1, "identity", T::kNone, "identity"},
      {2, "1×3 then 3×1 convolution", T::kConvolution,
       "1×3-3×1"},
      {3, "1×7 then 7×1 convolution", T::kConvolution,
       "1×7-7×1"},
      {4, "3×3 dilated convolution", T::kConvolution, "dil3×3"},
      {5, "3×3 average pooling", T::kPooling, "avg3×3"},
      {6, "3×3 max pooling", T::kPooling, "max3×3"},
      {7, "5×5 max pooling", T::kPooling, "max5×5"},
      {8, "7×7 max pooling", T::kPooling, "max7×7"},
      {9, "1×1 convolution", T::kConvolution, "conv1"},
      {10, "3×3 convolution", T::kConvolution, "conv3"},
      {11, "3×3 depthwise-separable conv", T::kConvolution, "sep3×3"},
      {12, "5×5 depthwise-separable conv", T::kConvolution, "sep5×5"},
      {13, "7×7 depthwise-separable conv", T::kConvolution, "sep7×7"},
  };
  const auto N = CellType::kNormal;
  const auto R = CellType::kReduction;
  std::vector<CellTemplate> cells = {
      {1, "AmoebaNet-A-Normalcell", N,
       {{{0, 1, 5, 6}, {0, 2, 11, 1}, {1, 0, 1, 5}, {2, 1, 13, 5},
         {0, 4, 1, 11}}}},
      {2, "NASNet-A-Normalcell", N,
       {{{1, 1, 11, 1}, {0, 1, 11, 12}, {1, 0, 5, 1}, {0, 0, 5, 5},
         {0, 0, 12, 11}}}},
      {3, "DARTS-Normalcell", N,
       {{{0, 1, 11, 11}, {0, 1, 11, 11}, {1, 0, 11, 1}, {0, 2, 1, 4}}}},
      {4, "CARS-H-Normalcell", N,
       {{{0, 1, 11, 4}, {1, 2, 11, 1}, {0, 1, 12, 1}, {3, 2, 4, 11}}}},
      {5, "AmoebaNet-A-Reductioncell", R,
       {{{0, 1, 5, 3}, {1, 1, 6, 13}, {2, 0, 1, 11}, {3, 0, 8, 12},
         {4, 2, 1, 7}}}},
      {6, "NASNet-A-Reductioncell", R,
       {{{0, 1, 13, 12}, {1, 0, 6, 13}, {1, 0, 5, 12}, {3, 2, 5, 1},
         {2, 1, 11, 6}}}},
      {7, "DARTS-Reductioncell", R,
       {{{0, 1, 6, 6}, {2, 1, 1, 6}, {0, 2, 6, 1}, {2, 1, 1, 6}}}},
      {8, "CARS-H-Reductioncell", R,
       {{{0, 1, 6, 12}, {1, 0, 7, 11}, {2, 3, 1, 5}, {1, 4, 4, 1}}}},
  };
  return CellLibrary(std::move(ops), std::move(cells));
}

}  // namespace

const CellLibrary& default_cell_library() {
  static const CellLibrary library = build_default_library();
  return library;
}

}  // namespace tsenas
