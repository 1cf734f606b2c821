// SPDX-License-Identifier: Apache-2.0
#include "boat/oracle.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace boat {

using json = nlohmann::json;

std::vector<double> LookupOracle::score(const std::vector<Sequence>& seqs) {
    std::vector<double> out;
    out.reserve(seqs.size());
    for (const auto& s : seqs) {
        auto it = table_.find(s.str());
        if (it == table_.end())
            throw OracleFailure("lookup oracle '" + name() + "' has no entry for " + s.str());
        out.push_back(it->second);
    }
    return out;
}

double pwm_score(const Sequence& s, const std::vector<std::unordered_map<char, double>>& weights) {
    if (s.size() != weights.size())
        throw LengthMismatch("PWM length does not match sequence length");
    double total = 0.0;
    for (std::size_t p = 0; p < weights.size(); ++p) {
        auto it = weights[p].find(s[p]);
        if (it == weights[p].end())
            throw MissingWeight("no PWM weight for '" + std::string(1, s[p]) + "' at position " +
                                std::to_string(p));
        total += it->second;
    }
    return total;
}

std::vector<double> PwmOracle::score(const std::vector<Sequence>& seqs) {
    std::vector<double> out;
    out.reserve(seqs.size());
    for (const auto& s : seqs) out.push_back(pwm_score(s, weights_));
    return out;
}

std::vector<double> MotifDistanceOracle::score(const std::vector<Sequence>& seqs) {
    std::vector<double> out;
    out.reserve(seqs.size());
    for (const auto& s : seqs) {
        if (s.size() != target_.size())
            throw LengthMismatch("motif-distance target length mismatch");
        int d = 0;
        for (std::size_t i = 0; i < s.size(); ++i) d += s[i] != target_[i];
        out.push_back(-static_cast<double>(d));
    }
    return out;
}

// ---------------------------------------------------------------- external

std::unique_ptr<ExternalOracle> ExternalOracle::spawn(const Options& opts) {
    if (opts.command.empty()) throw SpawnFailure("external oracle command is empty");

    int in_pipe[2], out_pipe[2];
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
        throw SpawnFailure(std::string("pipe: ") + std::strerror(errno));

    const int pid = fork();
    if (pid < 0) throw SpawnFailure(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        if (!opts.workdir.empty() && chdir(opts.workdir.c_str()) != 0) _exit(127);
        std::vector<char*> argv;
        for (const auto& a : opts.command) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        execvp(argv[0], argv.data());
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);

    // placeholder identity until the hello line arrives
    std::unique_ptr<ExternalOracle> o(new ExternalOracle("", Direction::maximize));
    o->pid_ = pid;
    o->to_child_ = in_pipe[1];
    o->from_child_ = out_pipe[0];
    o->opts_ = opts;

    std::string line;
    try {
        line = o->read_line(opts.startup_timeout_s);
    } catch (const ProtocolViolation&) {
        throw;
    } catch (const BoatError& e) {
        throw HandshakeTimeout("no hello from external oracle '" + opts.command[0] +
                               "': " + e.what());
    }
    json hello;
    try {
        hello = json::parse(line);
    } catch (const json::exception&) {
        throw ProtocolViolation("malformed hello line: \"" + line + "\"");
    }
    if (hello.value("type", "") != "hello" || !hello.contains("name") ||
        !hello.contains("direction"))
        throw ProtocolViolation("invalid hello message: \"" + line + "\"");
    const std::string dir = hello["direction"];
    if (dir != "maximize" && dir != "minimize")
        throw ProtocolViolation("invalid direction in hello: \"" + line + "\"");

    std::unique_ptr<ExternalOracle> named(new ExternalOracle(
        hello["name"].get<std::string>(),
        dir == "maximize" ? Direction::maximize : Direction::minimize));
    named->pid_ = o->pid_;
    named->to_child_ = o->to_child_;
    named->from_child_ = o->from_child_;
    named->rx_buffer_ = o->rx_buffer_;
    named->opts_ = o->opts_;
    o->pid_ = -1;  // ownership moved; don't kill the child twice
    o->to_child_ = o->from_child_ = -1;
    return named;
}

ExternalOracle::~ExternalOracle() { shutdown(); }

void ExternalOracle::shutdown() noexcept {
    if (to_child_ >= 0) {
        const std::string bye = "{\"type\":\"bye\"}\n";
        [[maybe_unused]] auto n = write(to_child_, bye.data(), bye.size());
        close(to_child_);
        to_child_ = -1;
    }
    if (from_child_ >= 0) {
        close(from_child_);
        from_child_ = -1;
    }
    if (pid_ > 0) {
        int status = 0;
        // give the child a moment to exit cleanly, then force it
        for (int i = 0; i < 50; ++i) {
            if (waitpid(pid_, &status, WNOHANG) == pid_) {
                pid_ = -1;
                return;
            }
            usleep(10000);
        }
        kill(pid_, SIGKILL);
        waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

void ExternalOracle::send_line(const std::string& line) {
    std::string msg = line + "\n";
    std::size_t off = 0;
    while (off < msg.size()) {
        const ssize_t n = write(to_child_, msg.data() + off, msg.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw OracleFailure("external oracle '" + name() +
                                "' write failed: " + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

std::string ExternalOracle::read_line(double timeout_s) {
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
    for (;;) {
        const auto nl = rx_buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = rx_buffer_.substr(0, nl);
            rx_buffer_.erase(0, nl + 1);
            return line;
        }
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline)
            throw OracleFailure("external oracle '" + name() + "' timed out");
        const auto remaining =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
        pollfd pfd{from_child_, POLLIN, 0};
        const int pr = poll(&pfd, 1, static_cast<int>(remaining.count()) + 1);
        if (pr < 0) {
            if (errno == EINTR) continue;
            throw OracleFailure(std::string("poll: ") + std::strerror(errno));
        }
        if (pr == 0) continue;
        char buf[4096];
        const ssize_t n = read(from_child_, buf, sizeof buf);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw OracleFailure("external oracle '" + name() +
                                "' read failed: " + std::strerror(errno));
        }
        if (n == 0)
            throw OracleFailure("external oracle '" + name() + "' closed its output stream");
        rx_buffer_.append(buf, static_cast<std::size_t>(n));
    }
}

std::vector<double> ExternalOracle::score(const std::vector<Sequence>& seqs) {
    std::vector<double> out;
    out.reserve(seqs.size());
    for (std::size_t start = 0; start < seqs.size(); start += kMaxBatch) {
        const std::size_t end = std::min(seqs.size(), start + kMaxBatch);
        const std::int64_t id = next_id_++;
        json req{{"type", "score"}, {"id", id}};
        auto& arr = req["sequences"] = json::array();
        for (std::size_t i = start; i < end; ++i) arr.push_back(seqs[i].str());
        send_line(req.dump());

        const std::string line = read_line(opts_.request_timeout_s);
        json resp;
        try {
            resp = json::parse(line);
        } catch (const json::exception&) {
            throw ProtocolViolation("malformed response line: \"" + line + "\"");
        }
        if (resp.value("type", "") != "scores" || !resp.contains("id") ||
            !resp.contains("values"))
            throw ProtocolViolation("invalid scores message: \"" + line + "\"");
        if (resp["id"].get<std::int64_t>() != id)
            throw ProtocolViolation("out-of-order response id in: \"" + line + "\"");
        const auto& values = resp["values"];
        if (!values.is_array() || values.size() != end - start)
            throw ProtocolViolation("values misaligned with sequences in: \"" + line + "\"");
        for (const auto& v : values) {
            if (!v.is_number())
                throw ProtocolViolation("non-numeric score in: \"" + line + "\"");
            out.push_back(v.get<double>());
        }
    }
    return out;
}

// -------------------------------------------------------------------- bank

OracleBank::OracleBank(std::vector<std::unique_ptr<Oracle>> oracles, int budget)
    : oracles_(std::move(oracles)), initial_budget_(budget), budget_(budget) {
    if (oracles_.empty()) throw ConfigError("oracle bank needs at least one oracle");
    if (budget < 0) throw ConfigError("negative oracle budget");
}

bool OracleBank::has_external() const {
    for (const auto& o : oracles_)
        if (o->external()) return true;
    return false;
}

std::optional<ScoreVector> OracleBank::cached(const Sequence& s) const {
    auto it = cache_.find(s);
    if (it == cache_.end()) return std::nullopt;
    return it->second;
}

std::vector<ScoreVector> OracleBank::score(const std::vector<Sequence>& seqs) {
    std::vector<Sequence> novel;
    std::unordered_map<Sequence, int> novel_index;
    for (const auto& s : seqs)
        if (!cache_.count(s) && novel_index.emplace(s, static_cast<int>(novel.size())).second)
            novel.push_back(s);

    if (static_cast<int>(novel.size()) > budget_)
        throw BudgetExhausted("budget " + std::to_string(budget_) + " cannot cover " +
                              std::to_string(novel.size()) + " novel sequences");

    if (!novel.empty()) {
        const int k = objectives();
        Eigen::MatrixXd raw(static_cast<Eigen::Index>(novel.size()), k);
        double wall_total = 0.0;
        for (int j = 0; j < k; ++j) {
            const auto t0 = std::chrono::steady_clock::now();
            const std::vector<double> vals = oracles_[j]->score(novel);
            wall_total += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                              .count();
            if (vals.size() != novel.size())
                throw OracleFailure("oracle '" + oracles_[j]->name() +
                                    "' returned a misaligned score count");
            for (std::size_t i = 0; i < vals.size(); ++i) raw(i, j) = vals[i];
        }
        const double wall_each = wall_total / static_cast<double>(novel.size());
        for (std::size_t i = 0; i < novel.size(); ++i) {
            ScoreVector stored(k);
            for (int j = 0; j < k; ++j)
                stored[j] = oracles_[j]->direction() == Direction::minimize ? -raw(i, j)
                                                                            : raw(i, j);
            cache_.emplace(novel[i], stored);
            --budget_;
            log_.push_back({static_cast<int>(log_.size()), novel[i], stored,
                            raw.row(i).transpose(), phase_, wall_each});
        }
    }

    std::vector<ScoreVector> out;
    out.reserve(seqs.size());
    for (const auto& s : seqs) out.push_back(cache_.at(s));
    return out;
}

void OracleBank::save_cache(const std::string& path) const {
    std::ostringstream os;
    os.precision(17);
    for (const auto& call : log_) {
        os << call.sequence.str();
        for (Eigen::Index j = 0; j < call.raw.size(); ++j) os << '\t' << call.raw[j];
        os << '\n';
    }
    atomic_write_file(path, os.str());
}

int OracleBank::load_cache(const std::string& path) {
    std::ifstream in(path);
    if (!in) return 0;
    const int k = objectives();
    int restored = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string seq_text;
        ls >> seq_text;
        Eigen::VectorXd raw(k);
        for (int j = 0; j < k; ++j)
            if (!(ls >> raw[j]))
                throw OracleFailure("corrupt cache line: \"" + line + "\"");
        Sequence s = Sequence::unchecked(seq_text);
        if (cache_.count(s)) continue;
        ScoreVector stored(k);
        for (int j = 0; j < k; ++j)
            stored[j] =
                oracles_[j]->direction() == Direction::minimize ? -raw[j] : raw[j];
        cache_.emplace(s, stored);
        --budget_;
        log_.push_back({static_cast<int>(log_.size()), s, stored, raw, "restored", 0.0});
        ++restored;
    }
    return restored;
}

GroundTruth brute_force_front(const MutationSpace& space,
                              const std::vector<std::unique_ptr<Oracle>>& oracles,
                              const ScoreVector& ref, double cap, bool allow_external) {
    for (const auto& o : oracles)
        if (o->external() && !allow_external)
            throw ExternalOracleRefused("refusing to brute-force with external oracle '" +
                                        o->name() + "'");
    GroundTruth gt;
    gt.front = ParetoState(ref);
    const int k = static_cast<int>(oracles.size());

    constexpr std::size_t kChunk = 512;
    std::vector<Sequence> chunk;
    chunk.reserve(kChunk);
    std::int64_t next_id = 0;
    auto flush = [&] {
        if (chunk.empty()) return;
        std::vector<std::vector<double>> raw(k);
        for (int j = 0; j < k; ++j) raw[j] = oracles[j]->score(chunk);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            ScoreVector sv(k);
            for (int j = 0; j < k; ++j)
                sv[j] = oracles[j]->direction() == Direction::minimize ? -raw[j][i]
                                                                       : raw[j][i];
            gt.front_sequences.emplace(next_id, chunk[i]);
            gt.front.update(next_id++, sv);
        }
        gt.count += static_cast<double>(chunk.size());
        chunk.clear();
        // keep only sequences still on the front
        std::unordered_map<std::int64_t, Sequence> keep;
        for (const auto& e : gt.front.front()) {
            auto it = gt.front_sequences.find(e.id);
            if (it != gt.front_sequences.end()) keep.emplace(it->first, it->second);
        }
        gt.front_sequences = std::move(keep);
    };
    for_each_in_space(
        space,
        [&](const Sequence& s) {
            chunk.push_back(s);
            if (chunk.size() == kChunk) flush();
            return true;
        },
        cap);
    flush();
    return gt;
}

}  // namespace boat
