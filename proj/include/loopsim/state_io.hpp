#pragma once

// JSON snapshots: {mode_count, cutoff, amplitudes: [[re, im], ...], norm_weight}
// with amplitudes in flat-index order (mode 0 slowest).

#include <json.hpp>

#include <fstream>
#include <string>

#include "loopsim/errors.hpp"
#include "loopsim/fock_state.hpp"

namespace loopsim {

template <typename Scalar>
nlohmann::ordered_json to_json(const FockState<Scalar>& s) {
    nlohmann::ordered_json j;
    j["mode_count"] = s.mode_count();
    j["cutoff"] = s.cutoff();
    auto amps = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < s.amplitudes().size(); ++i) {
        const auto a = s.amplitudes()(i);
        amps.push_back({static_cast<double>(a.real()), static_cast<double>(a.imag())});
    }
    j["amplitudes"] = std::move(amps);
    j["norm_weight"] = static_cast<double>(s.norm_weight());
    return j;
}

template <typename Scalar = double>
FockState<Scalar> fock_state_from_json(const nlohmann::json& j) {
    try {
        const auto m = j.at("mode_count").get<std::size_t>();
        const auto d = j.at("cutoff").get<std::size_t>();
        const auto& amps = j.at("amplitudes");
        typename FockState<Scalar>::Vector v(static_cast<Eigen::Index>(amps.size()));
        for (std::size_t i = 0; i < amps.size(); ++i)
            v(static_cast<Eigen::Index>(i)) = {static_cast<Scalar>(amps[i].at(0).get<double>()),
                                               static_cast<Scalar>(amps[i].at(1).get<double>())};
        return FockState<Scalar>::from_amplitudes(m, d, std::move(v),
                                                  static_cast<Scalar>(j.value("norm_weight", 1.0)));
    } catch (const nlohmann::json::exception& e) {
        throw IOError(std::string("malformed state snapshot: ") + e.what());
    }
}

template <typename Scalar>
void save_state(const FockState<Scalar>& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IOError("cannot open " + path + " for writing");
    out << to_json(s).dump(2) << '\n';
}

template <typename Scalar = double>
FockState<Scalar> load_state(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IOError(path + ": " + e.what());
    }
    return fock_state_from_json<Scalar>(j);
}

}  // namespace loopsim
