var queue = [];

function push(ev) {
  queue.push(ev);
  return queue.length;
}

function drain() {
  var out = queue;
  queue = [];
  return out;
}

module.exports = { push: push, drain: drain };
