#pragma once

// Output handling. Files are written into a hidden staging directory and
// moved into place only when the command succeeds.

#include <nlohmann/json.hpp>

#include <Eigen/Core>
#include <boost/version.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "stokes2p/errors.hpp"
#include "stokes2p/version.hpp"

namespace stokes2p::driver {

namespace fs = std::filesystem;

class OutputStage {
  public:
    OutputStage(fs::path dir, const std::string& command) : dir_(std::move(dir)) {
        staging_ = dir_ / (".staging-" + command);
        std::error_code ec;
        fs::remove_all(staging_, ec);
        fs::create_directories(staging_);
    }
    OutputStage(const OutputStage&) = delete;
    OutputStage& operator=(const OutputStage&) = delete;
    ~OutputStage() {
        if (!committed_) {
            std::error_code ec;
            fs::remove_all(staging_, ec);
            // leave no empty output directory behind either
            if (fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
        }
    }

    fs::path path(const std::string& name) const { return staging_ / name; }

    std::ofstream open(const std::string& name) {
        std::ofstream out(path(name));
        if (!out) throw ConfigError("cannot write '" + path(name).string() + "'");
        out << std::setprecision(17);
        files_.push_back(name);
        return out;
    }

    void write_json(const std::string& name, const nlohmann::json& j) { open(name) << j.dump(2) << '\n'; }

    void commit() {
        for (const auto& f : files_) fs::rename(staging_ / f, dir_ / f);
        fs::remove_all(staging_);
        committed_ = true;
    }

    const std::vector<std::string>& files() const { return files_; }

  private:
    fs::path dir_, staging_;
    std::vector<std::string> files_;
    bool committed_ = false;
};

/// Tab-separated table with a header row.
class TsvWriter {
  public:
    TsvWriter(std::ostream& os, const std::vector<std::string>& columns) : os_(os), ncol_(columns.size()) {
        for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "\t" : "") << columns[i];
        os_ << '\n';
    }

    template <class... T> void row(const T&... values) {
        static_assert(sizeof...(T) > 0);
        if (sizeof...(T) != ncol_) throw ConfigError("table row has the wrong number of columns");
        std::size_t i = 0;
        ((os_ << (i++ ? "\t" : "") << values), ...);
        os_ << '\n';
    }

  private:
    std::ostream& os_;
    std::size_t ncol_;
};

inline nlohmann::json versions() {
    return {{"stokes2p", version},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                          std::to_string(BOOST_VERSION % 100)},
            {"compiler", __VERSION__}};
}

} // namespace stokes2p::driver
