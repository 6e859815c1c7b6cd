#include "ssmred/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ssmred {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    return is;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    return os;
}

std::vector<double> split_csv_line(const std::string& line) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    return out;
}

}  // namespace

Mat read_matrix_market(const std::string& path) {
    auto is = open_in(path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("%%MatrixMarket", 0) != 0)
        throw IoError(path + ": missing MatrixMarket banner");
    std::istringstream banner(line);
    std::string tag, object, fmt, field, symmetry;
    banner >> tag >> object >> fmt >> field >> symmetry;
    if (object != "matrix" || field != "real")
        throw IoError(path + ": only real matrices supported");
    bool coordinate = fmt == "coordinate";
    if (!coordinate && fmt != "array")
        throw IoError(path + ": unknown format " + fmt);
    bool symmetric = symmetry == "symmetric";
    if (!symmetric && symmetry != "general")
        throw IoError(path + ": unsupported symmetry " + symmetry);

    while (std::getline(is, line))
        if (!line.empty() && line[0] != '%') break;
    std::istringstream sizes(line);
    Eigen::Index rows, cols;
    sizes >> rows >> cols;
    Mat A = Mat::Zero(rows, cols);
    if (coordinate) {
        long long nnz;
        sizes >> nnz;
        for (long long e = 0; e < nnz; ++e) {
            Eigen::Index i, j;
            double v;
            if (!(is >> i >> j >> v)) throw IoError(path + ": truncated entry list");
            A(i - 1, j - 1) = v;
            if (symmetric && i != j) A(j - 1, i - 1) = v;
        }
    } else {
        // column-major dense listing; symmetric stores the lower triangle
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = symmetric ? j : 0; i < rows; ++i) {
                double v;
                if (!(is >> v)) throw IoError(path + ": truncated array data");
                A(i, j) = v;
                if (symmetric && i != j) A(j, i) = v;
            }
    }
    return A;
}

void write_matrix_market(const Mat& A, const std::string& path, bool sparse,
                         double drop_tol) {
    bool symmetric = A.rows() == A.cols() &&
                     (A - A.transpose()).cwiseAbs().maxCoeff() == 0.0;
    auto os = open_out(path);
    if (sparse) {
        std::vector<std::tuple<Eigen::Index, Eigen::Index, double>> entries;
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            for (Eigen::Index i = symmetric ? j : 0; i < A.rows(); ++i)
                if (std::abs(A(i, j)) > drop_tol)
                    entries.push_back({i, j, A(i, j)});
        os << "%%MatrixMarket matrix coordinate real "
           << (symmetric ? "symmetric" : "general") << "\n";
        os << A.rows() << " " << A.cols() << " " << entries.size() << "\n";
        for (const auto& [i, j, v] : entries)
            os << (i + 1) << " " << (j + 1) << " " << format_double(v) << "\n";
    } else {
        os << "%%MatrixMarket matrix array real "
           << (symmetric ? "symmetric" : "general") << "\n";
        os << A.rows() << " " << A.cols() << "\n";
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            for (Eigen::Index i = symmetric ? j : 0; i < A.rows(); ++i)
                os << format_double(A(i, j)) << "\n";
    }
}

Mat read_dense_csv(const std::string& path) {
    auto is = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        rows.push_back(split_csv_line(line));
        if (rows.back().size() != rows.front().size())
            throw IoError(path + ": ragged rows");
    }
    if (rows.empty()) throw IoError(path + ": empty file");
    Mat A(static_cast<Eigen::Index>(rows.size()),
          static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return A;
}

void write_dense_csv(const Mat& A, const std::string& path) {
    auto os = open_out(path);
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            os << format_double(A(i, j)) << (j + 1 < A.cols() ? "," : "");
        os << "\n";
    }
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path,
                          const std::vector<int>& dense_channels) {
    auto os = open_out(path);
    os << "t";
    for (Eigen::Index r = 0; r < traj.states.rows(); ++r) os << ",x" << r;
    os << "\n";
    for (int j = 0; j < traj.n_samples(); ++j) {
        os << format_double(traj.times[static_cast<std::size_t>(j)]);
        for (Eigen::Index r = 0; r < traj.states.rows(); ++r)
            os << "," << format_double(traj.states(r, j));
        os << "\n";
    }
    if (traj.stride_full != 1 || !dense_channels.empty()) {
        auto ms = open_out(path + ".meta");
        ms << "stride " << traj.stride_full << "\n";
        if (!dense_channels.empty()) {
            ms << "dense_channels";
            for (int c : dense_channels) ms << " " << c;
            ms << "\n";
        }
    }
}

Trajectory read_trajectory_csv(const std::string& path) {
    auto is = open_in(path);
    std::string line;
    if (!std::getline(is, line)) throw IoError(path + ": empty file");
    if (line.rfind("t", 0) != 0) throw IoError(path + ": missing header row");
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        rows.push_back(split_csv_line(line));
        if (rows.back().size() != rows.front().size())
            throw IoError(path + ": ragged rows");
    }
    if (rows.empty() || rows.front().size() < 2)
        throw IoError(path + ": no samples");
    Trajectory traj;
    traj.times.resize(rows.size());
    traj.states.resize(static_cast<Eigen::Index>(rows.front().size()) - 1,
                       static_cast<Eigen::Index>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j) {
        traj.times[j] = rows[j][0];
        for (std::size_t r = 1; r < rows[j].size(); ++r)
            traj.states(static_cast<Eigen::Index>(r) - 1, static_cast<Eigen::Index>(j)) =
                rows[j][r];
    }
    std::ifstream ms(path + ".meta");
    if (ms) {
        std::string key;
        while (ms >> key) {
            if (key == "stride") {
                ms >> traj.stride_full;
            } else {
                std::getline(ms, line);  // skip unknown keys
            }
        }
    }
    return traj;
}

}  // namespace ssmred
