#pragma once

#include <chrono>
#include <string>

#include <wfchain/node/config.hpp>
#include <wfchain/worklist/worklist.hpp>

namespace wfchain::node {

struct HandlerOutcome {
    bool ok = false;
    Json outputs = Json::object();
    std::string error;
};

/// Runs the handler for an automated work item. Commands get WF_CASE,
/// WF_TRANSITION and WF_INPUTS (canonical JSON) in their environment and
/// print the output values as a JSON object on stdout.
HandlerOutcome invoke_handler(const HandlerSpec& spec, const worklist::WorkItem& item,
                              std::chrono::milliseconds timeout = std::chrono::seconds(10));

} // namespace wfchain::node
