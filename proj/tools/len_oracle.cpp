// SPDX-License-Identifier: Apache-2.0
//
// Reference external oracle: scores every sequence by its length. Speaks the
// line-delimited JSON protocol on stdin/stdout. Failure-injection flags are
// used by the protocol-conformance tests:
//   --nondeterministic  add a call counter to every score
//   --malformed         emit a non-JSON response line
//   --misaligned        drop one value from each response
//   --crash             exit mid-request without responding
//   --silent            never send the hello line
#include <cstring>
#include <iostream>
#include <string>

#include <json.hpp>

int main(int argc, char** argv) {
    bool nondeterministic = false, malformed = false, misaligned = false, crash = false,
         silent = false;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--nondeterministic")) nondeterministic = true;
        if (!std::strcmp(argv[i], "--malformed")) malformed = true;
        if (!std::strcmp(argv[i], "--misaligned")) misaligned = true;
        if (!std::strcmp(argv[i], "--crash")) crash = true;
        if (!std::strcmp(argv[i], "--silent")) silent = true;
    }

    if (!silent) {
        std::cout << R"({"type":"hello","name":"len","direction":"maximize"})" << "\n"
                  << std::flush;
    }

    long calls = 0;
    std::string line;
    while (std::getline(std::cin, line)) {
        nlohmann::json msg;
        try {
            msg = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            return 1;
        }
        const std::string type = msg.value("type", "");
        if (type == "bye") return 0;
        if (type != "score") return 1;
        if (crash) return 1;
        if (malformed) {
            std::cout << "this is not json\n" << std::flush;
            continue;
        }
        nlohmann::json resp{{"type", "scores"}, {"id", msg.at("id")}};
        auto& values = resp["values"] = nlohmann::json::array();
        for (const auto& s : msg.at("sequences")) {
            double v = static_cast<double>(s.get<std::string>().size());
            if (nondeterministic) v += static_cast<double>(++calls);
            values.push_back(v);
        }
        if (misaligned && !values.empty()) values.erase(values.size() - 1);
        std::cout << resp.dump() << "\n" << std::flush;
    }
    return 0;
}
