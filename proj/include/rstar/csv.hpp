#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rstar/chain.hpp"

namespace rstar {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim surrounding whitespace
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_cell(const std::string& cell, std::size_t line_no, std::size_t col_no,
                         const std::string& col_name) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size())
        throw Error("load_csv: non-numeric cell \"" + cell + "\" at row " + std::to_string(line_no) + ", column " +
                    std::to_string(col_no + 1) + " (" + col_name + ")");
    if (!std::isfinite(v))
        throw Error("load_csv: non-finite value at row " + std::to_string(line_no) + ", column " +
                    std::to_string(col_no + 1) + " (" + col_name + ")");
    return v;
}

}  // namespace detail

// Long-format reader: header row required; a 1-based integer "chain" column
// identifies the chain, an "iteration" column (if present) is ignored for
// ordering — draw order within a chain follows file order. Remaining columns
// are parameters. Chains are returned in ascending chain-id order.
inline ChainSet load_csv(const std::string& path, const std::string& chain_column = "chain") {
    std::ifstream in(path);
    if (!in) throw Error("load_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error("load_csv: empty file " + path);
    const auto header = detail::split_csv_line(line);
    int chain_col = -1, iter_col = -1;
    std::vector<int> param_cols;
    std::vector<std::string> param_names;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == chain_column)
            chain_col = static_cast<int>(i);
        else if (header[i] == "iteration")
            iter_col = static_cast<int>(i);
        else {
            param_cols.push_back(static_cast<int>(i));
            param_names.push_back(header[i]);
        }
    }
    (void)iter_col;
    if (chain_col < 0) throw Error("load_csv: no \"" + chain_column + "\" column in " + path);
    if (param_cols.empty()) throw Error("load_csv: no parameter columns in " + path);

    std::map<long, std::vector<double>> per_chain;  // ascending chain id
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw Error("load_csv: row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(header.size()));
        char* end = nullptr;
        const long chain_id = std::strtol(cells[chain_col].c_str(), &end, 10);
        if (end != cells[chain_col].c_str() + cells[chain_col].size() || chain_id < 1)
            throw Error("load_csv: bad chain id \"" + cells[chain_col] + "\" at row " + std::to_string(line_no));
        auto& buf = per_chain[chain_id];
        for (std::size_t k = 0; k < param_cols.size(); ++k)
            buf.push_back(detail::parse_cell(cells[param_cols[k]], line_no, param_cols[k], param_names[k]));
    }
    if (per_chain.size() < 2)
        throw Error("load_csv: found " + std::to_string(per_chain.size()) + " chain(s), need at least 2");

    const std::size_t k = param_cols.size();
    std::size_t s = per_chain.begin()->second.size() / k;
    for (const auto& [id, buf] : per_chain)
        if (buf.size() / k != s)
            throw Error("load_csv: ragged chains — chain " + std::to_string(id) + " has " +
                        std::to_string(buf.size() / k) + " draws, chain " + std::to_string(per_chain.begin()->first) +
                        " has " + std::to_string(s));

    std::vector<double> draws;
    draws.reserve(per_chain.size() * s * k);
    for (const auto& [id, buf] : per_chain) draws.insert(draws.end(), buf.begin(), buf.end());
    return {static_cast<int>(per_chain.size()), static_cast<int>(s), static_cast<int>(k), std::move(draws),
            std::move(param_names), "csv:" + path};
}

// One-file-per-chain mode: each file holds parameter columns only; chain ids
// are assigned 1..N in path order.
inline ChainSet load_csv_per_chain(const std::vector<std::string>& paths) {
    if (paths.size() < 2) throw Error("load_csv: need at least 2 per-chain files");
    std::vector<std::vector<double>> chains;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < paths.size(); ++c) {
        std::ifstream in(paths[c]);
        if (!in) throw Error("load_csv: cannot open " + paths[c]);
        std::string line;
        if (!std::getline(in, line)) throw Error("load_csv: empty file " + paths[c]);
        const auto header = detail::split_csv_line(line);
        if (c == 0)
            names = header;
        else if (header != names)
            throw Error("load_csv: header of " + paths[c] + " differs from " + paths[0]);
        std::vector<double> buf;
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line == "\r") continue;
            const auto cells = detail::split_csv_line(line);
            if (cells.size() != header.size())
                throw Error("load_csv: row " + std::to_string(line_no) + " of " + paths[c] + " has " +
                            std::to_string(cells.size()) + " cells, expected " + std::to_string(header.size()));
            for (std::size_t k = 0; k < cells.size(); ++k)
                buf.push_back(detail::parse_cell(cells[k], line_no, k, header[k]));
        }
        chains.push_back(std::move(buf));
    }
    const std::size_t k = names.size();
    const std::size_t s = chains[0].size() / k;
    for (std::size_t c = 0; c < chains.size(); ++c)
        if (chains[c].size() / k != s)
            throw Error("load_csv: ragged chains — chain " + std::to_string(c + 1) + " has " +
                        std::to_string(chains[c].size() / k) + " draws, chain 1 has " + std::to_string(s));
    std::vector<double> draws;
    draws.reserve(chains.size() * s * k);
    for (auto& c : chains) draws.insert(draws.end(), c.begin(), c.end());
    return {static_cast<int>(chains.size()), static_cast<int>(s), static_cast<int>(k), std::move(draws),
            std::move(names), "csv-per-chain"};
}

/// %.17g round-trips doubles exactly through strtod.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void save_csv(const ChainSet& cs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("save_csv: cannot open " + path + " for writing");
    out << "chain,iteration";
    for (const auto& n : cs.param_names()) out << ',' << n;
    out << '\n';
    for (int n = 0; n < cs.n_chains(); ++n)
        for (int s = 0; s < cs.n_draws(); ++s) {
            out << (n + 1) << ',' << (s + 1);
            for (int k = 0; k < cs.n_params(); ++k) out << ',' << format_double(cs.at(n, s, k));
            out << '\n';
        }
    if (!out) throw Error("save_csv: write failed for " + path);
}

}  // namespace rstar
