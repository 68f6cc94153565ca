#pragma once

#include <string>

#include "evfilter/error.hpp"

namespace evf {

/// Filtering algorithms. IIR is the plain per-region filter; TM, BI, BIF
/// and DIF combine the four bracketing regions (max, bilinear, bilinear
/// with event-frequency weights, inverse-distance with frequency weights).
/// NNB is the per-pixel nearest-neighbour reference filter.
enum class Algorithm { IIR, TM, BI, BIF, DIF, NNB };

inline const char* algorithm_name(Algorithm a) {
    switch (a) {
    case Algorithm::IIR: return "iir";
    case Algorithm::TM: return "tm";
    case Algorithm::BI: return "bi";
    case Algorithm::BIF: return "bif";
    case Algorithm::DIF: return "dif";
    case Algorithm::NNB: return "nnb";
    }
    return "?";
}

inline bool algorithm_from_name(const std::string& name, Algorithm& out) {
    if (name == "iir") out = Algorithm::IIR;
    else if (name == "tm") out = Algorithm::TM;
    else if (name == "bi") out = Algorithm::BI;
    else if (name == "bif") out = Algorithm::BIF;
    else if (name == "dif") out = Algorithm::DIF;
    else if (name == "nnb") out = Algorithm::NNB;
    else return false;
    return true;
}

inline bool algorithm_uses_region_grid(Algorithm a) { return a != Algorithm::NNB; }

/// True for the methods that keep a per-region interval estimate in
/// addition to the filtered timestamp.
inline bool algorithm_uses_intervals(Algorithm a) {
    return a == Algorithm::BIF || a == Algorithm::DIF;
}

} // namespace evf
