#pragma once

#include <functional>
#include <string>
#include <vector>

#include "evoconv/matlaw.hpp"

namespace evoconv::detail {

struct LawNode {
    MaterialLaw::Kind kind = MaterialLaw::Kind::Zero;
    std::string label;
    bool time_invariant = false;  // TimeMul with a constant function

    std::vector<cplx> space;                         // SpaceMul
    std::function<cplx(double)> fn_t;                // TimeMul, TimeConvolution
    std::function<cplx(double, std::size_t)> fn_tc;  // SpaceTimeMul
    std::function<cplx(cplx)> symbol;                // Hardy
    double radius = 0.0;                             // Hardy
    double delay = 0.0;                              // Shift
    std::size_t offset = 0;                          // MeanProjection, CompressedInverse
    std::size_t size = 0;
    std::vector<double> b;  // CompressedInverse
    std::vector<MaterialLaw> children;
};

/// Zero-padding factor for spectral application: at least 4x, more when nu*T is small.
std::size_t hardy_padding(const TimeGrid& grid);
/// Convolution samples kappa_k of a Hardy law (its impulse response divided by dt).
std::vector<cplx> hardy_kernel(const LawNode& node, const TimeGrid& grid);
/// Checks r > 1/(2 nu).
void require_hardy_radius(const LawNode& node, const TimeGrid& grid);

/// (P b P + (1 - P))^{-1} applied to one block.
void compressed_inverse_block(const std::vector<double>& b, const cplx* in, cplx* out);

}  // namespace evoconv::detail
